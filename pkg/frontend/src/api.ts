// Thin typed client for the agent HTTP API.
//
// The console is read-only except for POST /chat and
// POST /pending/{id}/answer; nothing else may ever be written to.

export interface Approval {
  id: string;
  kind: 'grant-permission' | 'confirm-trust' | 'confirm-meeting' | 'pick-counterparty';
  question: string;
  options: Record<string, unknown>;
  conversationId: string;
  createdAt: string;
  answer: string | null;
}

export interface EnvelopeView {
  messageId: string;
  kind: string;
  from: string;
  to: string;
  context: string;
  payload: string;
}

export interface ConversationSummary {
  id: string;
  role: string;
  phase: string;
  counterparty: string;
}

export interface ConversationDetail extends ConversationSummary {
  transcript: EnvelopeView[];
}

export type ChatReply = { conversationId?: string; approvalId?: string };

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AgentApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) throw new Error(`GET ${path}: ${response.status}`);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw new Error(`POST ${path}: ${response.status}`);
    return (await response.json()) as T;
  }

  chat(prompt: string): Promise<ChatReply> {
    return this.postJson<ChatReply>('/chat', { prompt });
  }

  answer(approvalId: string, choice: string): Promise<unknown> {
    return this.postJson(`/pending/${approvalId}/answer`, { choice });
  }

  pending(): Promise<Approval[]> {
    return this.getJson<Approval[]>('/pending');
  }

  conversations(): Promise<ConversationSummary[]> {
    return this.getJson<ConversationSummary[]>('/conversations');
  }

  conversation(id: string): Promise<ConversationDetail> {
    return this.getJson<ConversationDetail>(`/conversations/${id}`);
  }

  eventsUrl(): string {
    return this.baseUrl + '/events';
  }
}
