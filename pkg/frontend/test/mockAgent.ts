// A scripted in-memory agent implementing just enough of the HTTP API:
// POST /chat pauses on a grant-permission approval; allowing it raises a
// confirm-trust approval; granting that drives the conversation through
// task-request -> proposal -> accept to the accepted phase.

import { Approval, ConversationDetail, FetchLike } from '../src/api.js';

export interface RecordedCall {
  method: string;
  path: string;
  body?: unknown;
}

export class MockAgent {
  approvals: Approval[] = [];
  conversation: ConversationDetail | null = null;
  calls: RecordedCall[] = [];
  failing = false; // simulate the agent being offline
  onEvent: ((type: string) => void) | null = null;

  private approvalCounter = 0;

  private emit(type: string): void {
    if (this.onEvent) this.onEvent(type);
  }

  private raiseApproval(kind: Approval['kind'], question: string, options: object): Approval {
    const approval: Approval = {
      id: `ap-${this.approvalCounter++}`,
      kind,
      question,
      options: options as Record<string, unknown>,
      conversationId: this.conversation?.id ?? '',
      createdAt: '2024-11-04T08:00:00Z',
      answer: null,
    };
    this.approvals.push(approval);
    this.emit('approval-raised');
    return approval;
  }

  private handleChat(prompt: string): object {
    this.conversation = {
      id: 'c-1',
      role: 'initiator',
      phase: 'created',
      counterparty: 'https://nigel.example/profile#me',
      transcript: [],
    };
    const approval = this.raiseApproval(
      'grant-permission',
      `Share urn:charlie:data:jun-calendar with Nigel for scheduling?`,
      {
        graphs: ['urn:charlie:data:jun-calendar'],
        action: 'read',
        assignee: 'https://nigel.example/profile#me',
        assigneeName: 'Nigel',
        obligations: [{ kind: 'delete-after', value: 'P30D' }],
      },
    );
    this.emit('conversation-updated');
    return { approvalId: approval.id };
  }

  private handleAnswer(id: string, choice: string): object | null {
    const approval = this.approvals.find((a) => a.id === id);
    if (!approval || approval.answer !== null) return null;
    approval.answer = choice;
    const conversation = this.conversation!;
    if (approval.kind === 'grant-permission' && choice === 'allow') {
      conversation.phase = 'request-sent';
      conversation.transcript.push({
        messageId: 'm-1',
        kind: 'task-request',
        from: 'jun',
        to: 'nigel',
        context: 'Jun seeks to schedule a meeting for next week.',
        payload: '',
      });
      this.raiseApproval('confirm-trust', 'Do you trust Jun for: http://schema.org/Event?', {
        source: 'https://jun.example/profile#me',
        sourceName: 'Jun',
        topics: ['http://schema.org/Event'],
      });
    } else if (approval.kind === 'confirm-trust' && choice === 'grant') {
      conversation.phase = 'accepted';
      conversation.transcript.push(
        {
          messageId: 'm-2',
          kind: 'proposal',
          from: 'nigel',
          to: 'jun',
          context: 'earliest free slot 2024-11-11 12:00-13:00 UTC',
          payload: '',
        },
        { messageId: 'm-3', kind: 'accept', from: 'jun', to: 'nigel', context: '', payload: '' },
      );
    } else {
      conversation.phase = 'rejected';
    }
    this.emit('conversation-updated');
    return { status: 'answered', approvalId: id };
  }

  fetch: FetchLike = async (input, init) => {
    const url = new URL(input);
    const method = init?.method ?? 'GET';
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    this.calls.push({ method, path: url.pathname, body });
    if (this.failing) throw new TypeError('fetch failed');

    const json = (status: number, data: unknown) =>
      new Response(JSON.stringify(data), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (method === 'POST' && url.pathname === '/chat') {
      return json(200, this.handleChat((body as { prompt: string }).prompt));
    }
    const answerMatch = url.pathname.match(/^\/pending\/([^/]+)\/answer$/);
    if (method === 'POST' && answerMatch) {
      const result = this.handleAnswer(answerMatch[1], (body as { choice: string }).choice);
      return result ? json(200, result) : json(404, { error: 'unknown approval' });
    }
    if (method === 'GET' && url.pathname === '/pending') {
      return json(200, this.approvals.filter((a) => a.answer === null));
    }
    if (method === 'GET' && url.pathname === '/conversations') {
      return json(
        200,
        this.conversation
          ? [
              {
                id: this.conversation.id,
                role: this.conversation.role,
                phase: this.conversation.phase,
                counterparty: this.conversation.counterparty,
              },
            ]
          : [],
      );
    }
    const detailMatch = url.pathname.match(/^\/conversations\/([^/]+)$/);
    if (method === 'GET' && detailMatch) {
      if (this.conversation && this.conversation.id === detailMatch[1]) {
        return json(200, this.conversation);
      }
      return json(404, { error: 'unknown conversation' });
    }
    return json(404, { error: 'not found' });
  };
}

export class FakeEventSource {
  static instances: FakeEventSource[] = [];
  listeners = new Map<string, Array<(event: unknown) => void>>();
  onerror: ((event: unknown) => void) | null = null;
  onopen: ((event: unknown) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {
    FakeEventSource.instances.push(this);
  }

  addEventListener(type: string, listener: (event: unknown) => void): void {
    const existing = this.listeners.get(type) ?? [];
    existing.push(listener);
    this.listeners.set(type, existing);
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.({});
  }

  emit(type: string): void {
    for (const listener of this.listeners.get(type) ?? []) listener({ type });
  }

  fail(): void {
    this.onerror?.({});
  }
}
