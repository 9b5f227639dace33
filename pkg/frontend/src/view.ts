// DOM rendering: a chat pane on the left, the approvals inbox on the
// right.  Re-rendered wholesale from session state on every change; the
// document never holds state of its own.

import { Approval, ConversationDetail } from './api.js';
import { ConsoleSession, SessionState } from './session.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function choiceButtons(
  session: ConsoleSession,
  approval: Approval,
  choices: Array<[label: string, choice: string]>,
): HTMLElement {
  const row = el('div', 'choices');
  for (const [label, choice] of choices) {
    const button = el('button', 'choice', label);
    button.dataset.choice = choice;
    button.addEventListener('click', () => void session.answer(approval.id, choice));
    row.appendChild(button);
  }
  return row;
}

function approvalCard(session: ConsoleSession, approval: Approval): HTMLElement {
  const card = el('article', `card approval ${approval.kind}`);
  card.dataset.approvalId = approval.id;
  card.appendChild(el('h3', 'kind', approval.kind));
  card.appendChild(el('p', 'question', approval.question));
  const options = el('dl', 'options');
  const add = (term: string, detail: string) => {
    options.appendChild(el('dt', undefined, term));
    options.appendChild(el('dd', undefined, detail));
  };
  const opts = approval.options as Record<string, unknown>;
  switch (approval.kind) {
    case 'grant-permission': {
      add('graphs', (opts.graphs as string[]).join(', '));
      add('action', String(opts.action));
      add('recipient', String(opts.assigneeName ?? opts.assignee));
      const obligations = (opts.obligations as Array<{ kind: string; value?: string }>) ?? [];
      add(
        'obligations',
        obligations.length
          ? obligations.map((o) => (o.value ? `${o.kind} (${o.value})` : o.kind)).join(', ')
          : 'none',
      );
      card.appendChild(options);
      card.appendChild(choiceButtons(session, approval, [['Allow', 'allow'], ['Deny', 'deny']]));
      break;
    }
    case 'confirm-trust': {
      add('source', String(opts.sourceName ?? opts.source));
      add('topics', (opts.topics as string[]).join(', '));
      card.appendChild(options);
      card.appendChild(choiceButtons(session, approval, [['Grant', 'grant'], ['Refuse', 'refuse']]));
      break;
    }
    case 'confirm-meeting': {
      add('time', `${String(opts.start)} to ${String(opts.end)}`);
      add('attendees', (opts.attendees as string[]).join(', '));
      card.appendChild(options);
      card.appendChild(
        choiceButtons(session, approval, [['Approve', 'approve'], ['Decline', 'decline']]),
      );
      break;
    }
    case 'pick-counterparty': {
      const candidates = (opts.candidates as Array<{ webid: string; name: string }>) ?? [];
      card.appendChild(options);
      card.appendChild(
        choiceButtons(
          session,
          approval,
          candidates.map((c) => [c.name || c.webid, c.webid]),
        ),
      );
      break;
    }
  }
  return card;
}

function conversationCard(detail: ConversationDetail): HTMLElement {
  const card = el('article', `card conversation phase-${detail.phase}`);
  card.dataset.conversationId = detail.id;
  card.appendChild(el('h3', undefined, `${detail.role} · ${detail.phase}`));
  card.appendChild(el('p', 'counterparty', detail.counterparty));
  const log = el('ul', 'transcript');
  for (const envelope of detail.transcript) {
    const line = el('li', `envelope ${envelope.kind}`);
    line.appendChild(el('span', 'kind', envelope.kind));
    if (envelope.context) line.appendChild(el('span', 'context', envelope.context));
    log.appendChild(line);
  }
  card.appendChild(log);
  return card;
}

export class ConsoleView {
  private readonly banner: HTMLElement;
  private readonly chatForm: HTMLFormElement;
  private readonly promptInput: HTMLInputElement;
  private readonly conversationsPane: HTMLElement;
  private readonly approvalsPane: HTMLElement;

  constructor(root: HTMLElement, private readonly session: ConsoleSession, agentUrl: string) {
    root.innerHTML = '';
    this.banner = el('div', 'banner hidden');
    root.appendChild(this.banner);

    const header = el('header');
    header.appendChild(el('h1', undefined, 'Agent console'));
    header.appendChild(el('p', 'agent-url', agentUrl));
    root.appendChild(header);

    const main = el('main');
    const chat = el('section', 'chat');
    chat.appendChild(el('h2', undefined, 'Chat'));
    this.chatForm = el('form');
    this.promptInput = el('input');
    this.promptInput.name = 'prompt';
    this.promptInput.placeholder = 'e.g. Schedule a meeting with Nigel next week';
    const send = el('button', undefined, 'Send');
    send.type = 'submit';
    this.chatForm.appendChild(this.promptInput);
    this.chatForm.appendChild(send);
    this.chatForm.addEventListener('submit', (event) => {
      event.preventDefault();
      const prompt = this.promptInput.value.trim();
      if (!prompt) return;
      this.promptInput.value = '';
      void this.session.submitPrompt(prompt);
    });
    chat.appendChild(this.chatForm);
    this.conversationsPane = el('div', 'conversations');
    chat.appendChild(this.conversationsPane);
    main.appendChild(chat);

    const inbox = el('section', 'inbox');
    inbox.appendChild(el('h2', undefined, 'Approvals'));
    this.approvalsPane = el('div', 'approvals');
    inbox.appendChild(this.approvalsPane);
    main.appendChild(inbox);
    root.appendChild(main);

    session.onChange((state) => this.render(state));
    this.render(session.state);
  }

  render(state: SessionState): void {
    this.banner.textContent = state.connected
      ? ''
      : `Agent unreachable (${state.lastError ?? 'no connection'}) — retrying`;
    this.banner.classList.toggle('hidden', state.connected);

    this.approvalsPane.innerHTML = '';
    if (state.approvals.length === 0) {
      this.approvalsPane.appendChild(el('p', 'empty', 'Nothing waiting for you.'));
    }
    for (const approval of state.approvals) {
      this.approvalsPane.appendChild(approvalCard(this.session, approval));
    }

    this.conversationsPane.innerHTML = '';
    for (const summary of state.conversations) {
      const detail = state.details.get(summary.id);
      if (detail) this.conversationsPane.appendChild(conversationCard(detail));
    }
  }
}
