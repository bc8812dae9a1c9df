/**
 * Fleet view state: server snapshots are the single source of truth.
 *
 * Operator actions show an optimistic echo that is either confirmed by a
 * later snapshot or rolled back when the server rejects the command; the
 * store never fabricates values the server has not sent. After three
 * missed refreshes the view is flagged stale.
 */

import { NodeStatus, StatusSnapshot } from "./protocol.js";

export const STALE_AFTER_MISSES = 3;

export interface PendingEcho {
  tap?: number;
  mode?: string;
}

export interface NodeView {
  status: NodeStatus;
  pending: PendingEcho;
}

export type Connection = "connecting" | "live" | "stale" | "disconnected";

export class FleetStore {
  version = -1;
  roundPeriodS = 0;
  nextRoundS = 0;
  roundsRun = 0;
  pendingUpdates = 0;
  missedUpdates = 0;
  connected = false;
  private nodes = new Map<string, NodeView>();

  applySnapshot(snapshot: StatusSnapshot): void {
    this.version = snapshot.version;
    this.roundPeriodS = snapshot.round_period_s;
    this.nextRoundS = snapshot.next_round_s;
    this.roundsRun = snapshot.rounds_run;
    this.pendingUpdates = snapshot.pending_updates;
    this.missedUpdates = 0;
    this.connected = true;

    const seen = new Set<string>();
    for (const status of snapshot.nodes) {
      seen.add(status.node_id);
      const view = this.nodes.get(status.node_id);
      if (view === undefined) {
        this.nodes.set(status.node_id, { status, pending: {} });
        continue;
      }
      view.status = status;
      // an echo is confirmed (and dropped) once the server reports it
      if (view.pending.tap !== undefined && status.tap === view.pending.tap) {
        delete view.pending.tap;
      }
      if (view.pending.mode !== undefined && status.mode === view.pending.mode) {
        delete view.pending.mode;
      }
    }
    for (const nodeId of this.nodes.keys()) {
      if (!seen.has(nodeId)) this.nodes.delete(nodeId);
    }
  }

  markMissed(): void {
    this.missedUpdates += 1;
  }

  markDisconnected(): void {
    this.connected = false;
  }

  get connection(): Connection {
    if (!this.connected) return this.version < 0 ? "connecting" : "disconnected";
    return this.missedUpdates >= STALE_AFTER_MISSES ? "stale" : "live";
  }

  nodeIds(): string[] {
    return [...this.nodes.keys()].sort();
  }

  node(nodeId: string): NodeView | undefined {
    return this.nodes.get(nodeId);
  }

  /** Value to render: optimistic echo when present, else the snapshot. */
  displayedTap(nodeId: string): number | undefined {
    const view = this.nodes.get(nodeId);
    if (view === undefined) return undefined;
    return view.pending.tap ?? view.status.tap;
  }

  displayedMode(nodeId: string): string | undefined {
    const view = this.nodes.get(nodeId);
    if (view === undefined) return undefined;
    return view.pending.mode ?? view.status.mode;
  }

  echoTap(nodeId: string, tap: number): void {
    const view = this.nodes.get(nodeId);
    if (view === undefined) throw new Error(`unknown node ${nodeId}`);
    view.pending.tap = tap;
    view.pending.mode = "manual"; // overrides flip the node to manual
  }

  echoMode(nodeId: string, mode: string): void {
    const view = this.nodes.get(nodeId);
    if (view === undefined) throw new Error(`unknown node ${nodeId}`);
    view.pending.mode = mode;
  }

  rollback(nodeId: string): void {
    const view = this.nodes.get(nodeId);
    if (view !== undefined) view.pending = {};
  }
}
