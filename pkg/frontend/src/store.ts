/**
 * Console state: the polled pending queue and resolution bookkeeping.
 *
 * Kept free of DOM concerns so the polling/resolution behavior is unit
 * testable. Optimistic UI is deliberately forbidden for resolutions: a row
 * only changes when the server's answer (or the next poll) says so.
 */

import { ApiError, GatewayClient } from './api';
import type { PendingAction, ResolutionResponse } from './types';

export interface QueueState {
  connected: boolean;
  banner: string | null;
  pending: PendingAction[];
  /** finished resolutions by hash, as reported by the server */
  resolutions: Map<string, ResolutionResponse>;
  /** hashes with an in-flight resolution request (buttons disabled) */
  inFlight: Set<string>;
}

export type Listener = (state: QueueState) => void;

export class ApprovalQueueStore {
  private state: QueueState = {
    connected: false,
    banner: 'connecting…',
    pending: [],
    resolutions: new Map(),
    inFlight: new Set(),
  };
  private listeners: Listener[] = [];
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly client: GatewayClient,
    private readonly tenant?: string,
  ) {}

  getState(): QueueState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(partial: Partial<QueueState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  /** One poll: refresh the queue; on failure show a banner and disarm buttons. */
  async refresh(): Promise<void> {
    try {
      const pending = await this.client.pendingApprovals(this.tenant);
      this.emit({ connected: true, banner: null, pending });
    } catch (err) {
      // A disconnected console must not present actionable approve buttons.
      this.emit({
        connected: false,
        banner: `gateway unreachable: ${err instanceof Error ? err.message : String(err)}`,
        pending: [],
      });
    }
  }

  startPolling(intervalMs: number): void {
    this.stopPolling();
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  canResolve(hash: string): boolean {
    return this.state.connected && !this.state.inFlight.has(hash);
  }

  /**
   * Submit a verdict. Double-click safe: a second click while the first
   * request is in flight is a no-op, and the server contract is idempotent,
   * so a duplicate submission from another console yields the same
   * resolution marked `already_resolved`.
   */
  async resolve(hash: string, verdict: 'approve' | 'reject'): Promise<ResolutionResponse | null> {
    if (!this.canResolve(hash)) return null;
    const inFlight = new Set(this.state.inFlight);
    inFlight.add(hash);
    this.emit({ inFlight });
    try {
      const resolution = await this.client.resolve(hash, verdict, this.tenant);
      const resolutions = new Map(this.state.resolutions);
      resolutions.set(hash, resolution);
      this.emit({
        resolutions,
        pending: this.state.pending.filter((p) => p.hash !== hash),
      });
      return resolution;
    } catch (err) {
      if (err instanceof ApiError && err.status === 401) {
        this.emit({ banner: `credential rejected: ${err.message}` });
      } else {
        this.emit({ banner: err instanceof Error ? err.message : String(err) });
      }
      return null;
    } finally {
      const cleared = new Set(this.state.inFlight);
      cleared.delete(hash);
      this.emit({ inFlight: cleared });
    }
  }
}
