// Console session state: a pure projection of the agent API.
//
// Live updates arrive over SSE; every notification just triggers a full
// refresh, so reloading the page (or losing an event) can never leave the
// console out of sync.  When SSE is unavailable or broken the session
// polls instead and keeps retrying the subscription with backoff.

import { AgentApi, Approval, ConversationDetail, ConversationSummary } from './api.js';

export interface SessionState {
  connected: boolean;
  live: boolean; // true when the SSE stream is attached
  approvals: Approval[];
  conversations: ConversationSummary[];
  details: Map<string, ConversationDetail>;
  lastError: string | null;
}

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: unknown) => void): void;
  close(): void;
  onerror: ((event: unknown) => void) | null;
  onopen: ((event: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface SessionOptions {
  eventSourceFactory?: EventSourceFactory | null;
  pollIntervalMs?: number;
  backoffMs?: number[];
}

const DEFAULT_POLL_MS = 2000;
const DEFAULT_BACKOFF_MS = [1000, 2000, 5000, 10000];

function defaultFactory(): EventSourceFactory | null {
  if (typeof EventSource === 'undefined') return null;
  return (url) => new EventSource(url) as unknown as EventSourceLike;
}

export class ConsoleSession {
  readonly state: SessionState = {
    connected: false,
    live: false,
    approvals: [],
    conversations: [],
    details: new Map(),
    lastError: null,
  };

  private listeners: Array<(state: SessionState) => void> = [];
  private source: EventSourceLike | null = null;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;
  private retryCount = 0;
  private stopped = false;
  private readonly factory: EventSourceFactory | null;
  private readonly pollIntervalMs: number;
  private readonly backoffMs: number[];

  constructor(private readonly api: AgentApi, options: SessionOptions = {}) {
    this.factory =
      options.eventSourceFactory === undefined ? defaultFactory() : options.eventSourceFactory;
    this.pollIntervalMs = options.pollIntervalMs ?? DEFAULT_POLL_MS;
    this.backoffMs = options.backoffMs ?? DEFAULT_BACKOFF_MS;
  }

  onChange(listener: (state: SessionState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  // --- projection -----------------------------------------------------------

  async refresh(): Promise<void> {
    try {
      const [approvals, conversations] = await Promise.all([
        this.api.pending(),
        this.api.conversations(),
      ]);
      const details = new Map<string, ConversationDetail>();
      for (const summary of conversations) {
        details.set(summary.id, await this.api.conversation(summary.id));
      }
      this.state.approvals = approvals;
      this.state.conversations = conversations;
      this.state.details = details;
      this.state.connected = true;
      this.state.lastError = null;
    } catch (error) {
      this.state.connected = false;
      this.state.lastError = String(error);
    }
    this.notify();
  }

  // --- writes (the only two the console is allowed) ---------------------------

  async submitPrompt(prompt: string): Promise<void> {
    try {
      await this.api.chat(prompt);
    } catch (error) {
      this.state.lastError = String(error);
    }
    await this.refresh();
  }

  async answer(approvalId: string, choice: string): Promise<void> {
    try {
      await this.api.answer(approvalId, choice);
    } catch (error) {
      this.state.lastError = String(error);
    }
    await this.refresh();
  }

  // --- live subscription -------------------------------------------------------

  start(): void {
    this.stopped = false;
    void this.refresh();
    this.subscribe();
  }

  stop(): void {
    this.stopped = true;
    this.detach();
    if (this.pollTimer !== null) clearInterval(this.pollTimer);
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.pollTimer = null;
    this.retryTimer = null;
  }

  private detach(): void {
    if (this.source !== null) {
      this.source.close();
      this.source = null;
    }
    this.state.live = false;
  }

  private ensurePolling(): void {
    if (this.pollTimer !== null) return;
    this.pollTimer = setInterval(() => void this.refresh(), this.pollIntervalMs);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private subscribe(): void {
    if (this.stopped) return;
    if (this.factory === null) {
      this.ensurePolling(); // SSE unsupported: poll fallback
      return;
    }
    let source: EventSourceLike;
    try {
      source = this.factory(this.api.eventsUrl());
    } catch {
      this.ensurePolling();
      return;
    }
    this.source = source;
    const onNotification = () => void this.refresh();
    source.addEventListener('approval-raised', onNotification);
    source.addEventListener('conversation-updated', onNotification);
    source.onopen = () => {
      this.state.live = true;
      this.retryCount = 0;
      this.stopPolling();
      void this.refresh();
    };
    source.onerror = () => {
      this.detach();
      this.state.connected = false;
      this.notify();
      this.ensurePolling(); // keep data flowing while reconnecting
      const delay = this.backoffMs[Math.min(this.retryCount, this.backoffMs.length - 1)];
      this.retryCount += 1;
      this.retryTimer = setTimeout(() => this.subscribe(), delay);
    };
  }
}
