/**
 * Two interchangeable ways to reach the service: the envelope bridge over
 * a browser socket (primary), and the REST endpoints (fallback, and what
 * headless tests use). Both carry identical payloads.
 */

import {
  CommandRejected,
  Envelope,
  OperatorCommand,
  StatusSnapshot,
  makeEnvelope,
} from "./protocol.js";

export interface Transport {
  status(): Promise<StatusSnapshot>;
  command(nodeId: string, command: OperatorCommand): Promise<void>;
  close(): void;
}

/** The subset of WebSocket the bridge needs; injectable for tests. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

const RECONNECT_BASE_MS = 500;
const RECONNECT_MAX_MS = 15_000;

export class WsTransport implements Transport {
  private socket: SocketLike | null = null;
  private pending = new Map<number | string, { resolve: (env: Envelope) => void; reject: (err: Error) => void }>();
  private reconnectAttempts = 0;
  private closed = false;
  onConnectionChange: ((up: boolean) => void) | null = null;

  constructor(
    private readonly url: string,
    private readonly socketFactory: SocketFactory,
    private readonly scheduleReconnect: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    const socket = this.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectAttempts = 0;
      this.onConnectionChange?.(true);
    };
    socket.onmessage = (ev) => this.dispatch(ev.data);
    socket.onerror = () => undefined;
    socket.onclose = () => {
      this.onConnectionChange?.(false);
      this.failAllPending(new Error("connection lost"));
      if (this.closed) return;
      const backoff = Math.min(RECONNECT_BASE_MS * 2 ** this.reconnectAttempts, RECONNECT_MAX_MS);
      this.reconnectAttempts += 1;
      this.scheduleReconnect(() => this.connect(), backoff);
    };
  }

  private dispatch(data: string): void {
    let env: Envelope;
    try {
      env = JSON.parse(data) as Envelope;
    } catch {
      return; // not ours; responses always carry a known id
    }
    const waiter = this.pending.get(env.id);
    if (waiter === undefined) return;
    this.pending.delete(env.id);
    waiter.resolve(env);
  }

  private failAllPending(err: Error): void {
    for (const waiter of this.pending.values()) waiter.reject(err);
    this.pending.clear();
  }

  request(type: string, payload: Record<string, unknown>): Promise<Envelope> {
    const env = makeEnvelope(type, payload);
    return new Promise((resolve, reject) => {
      if (this.socket === null) {
        reject(new Error("not connected"));
        return;
      }
      this.pending.set(env.id, { resolve, reject });
      try {
        this.socket.send(JSON.stringify(env));
      } catch (err) {
        this.pending.delete(env.id);
        reject(err instanceof Error ? err : new Error(String(err)));
      }
    });
  }

  async status(): Promise<StatusSnapshot> {
    const env = await this.request("status", {});
    if (env.type === "error") {
      const payload = env.payload as { code: string; message: string };
      throw new CommandRejected(payload.code, payload.message);
    }
    return env.payload as unknown as StatusSnapshot;
  }

  async command(nodeId: string, command: OperatorCommand): Promise<void> {
    const env = await this.request("command", { node_id: nodeId, ...command });
    if (env.type === "error") {
      const payload = env.payload as { code: string; message: string };
      throw new CommandRejected(payload.code, payload.message);
    }
  }

  close(): void {
    this.closed = true;
    this.failAllPending(new Error("transport closed"));
    this.socket?.close();
  }
}

type FetchLike = (url: string, init?: Record<string, unknown>) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class HttpTransport implements Transport {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  async status(): Promise<StatusSnapshot> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/status`);
    if (!resp.ok) throw new Error(`status request failed: ${resp.status}`);
    return (await resp.json()) as StatusSnapshot;
  }

  async command(nodeId: string, command: OperatorCommand): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/command`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ node_id: nodeId, ...command }),
    });
    if (!resp.ok) {
      const body = (await resp.json()) as { detail?: { code?: string; message?: string } };
      throw new CommandRejected(
        body.detail?.code ?? "error",
        body.detail?.message ?? `command failed: ${resp.status}`,
      );
    }
  }

  close(): void {
    // stateless
  }
}
