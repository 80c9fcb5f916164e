/**
 * Typed client for the gateway endpoints the console consumes.
 * The console is a pure client: every decision it displays was made
 * server-side, and removing the console changes no enforcement semantics.
 */

import type {
  CommitResponse,
  LedgerRecord,
  PendingAction,
  PolicyInfo,
  ReplayReport,
  ResolutionResponse,
  VerifyReport,
} from './types';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = (await response.json()) as { error?: string; detail?: string };
    return new ApiError(response.status, body.error ?? 'error', body.detail ?? response.statusText);
  } catch {
    return new ApiError(response.status, 'error', response.statusText);
  }
}

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    readonly approverToken: string = '',
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown, authorized = false): Promise<T> {
    const headers: Record<string, string> = { 'Content-Type': 'application/json' };
    if (authorized) headers['Authorization'] = `Bearer ${this.approverToken}`;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: 'POST',
      headers,
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  health(): Promise<{ ok: boolean; tenants: string[] }> {
    return this.get('/v1/health');
  }

  pendingApprovals(tenant?: string): Promise<PendingAction[]> {
    const qs = tenant ? `?tenant=${encodeURIComponent(tenant)}` : '';
    return this.get<{ pending: PendingAction[] }>(`/v1/approvals/pending${qs}`).then(
      (body) => body.pending,
    );
  }

  resolve(hash: string, verdict: 'approve' | 'reject', tenant?: string): Promise<ResolutionResponse> {
    return this.post(`/v1/approvals/${hash}/resolve`, { verdict, ...(tenant ? { tenant } : {}) }, true);
  }

  commit(body: Record<string, unknown>): Promise<CommitResponse> {
    return this.post('/v1/action/commit', body);
  }

  ledger(tenant?: string, from?: number, to?: number): Promise<LedgerRecord[]> {
    const params = new URLSearchParams();
    if (tenant) params.set('tenant', tenant);
    if (from !== undefined) params.set('from', String(from));
    if (to !== undefined) params.set('to', String(to));
    const qs = params.toString() ? `?${params.toString()}` : '';
    return this.get<{ records: LedgerRecord[] }>(`/v1/ledger${qs}`).then((b) => b.records);
  }

  verifyLedger(tenant?: string): Promise<VerifyReport> {
    const qs = tenant ? `?tenant=${encodeURIComponent(tenant)}` : '';
    return this.get(`/v1/ledger/verify${qs}`);
  }

  replay(body: Record<string, unknown>): Promise<ReplayReport> {
    return this.post('/v1/replay', body);
  }

  policy(version: string, tenant?: string): Promise<PolicyInfo> {
    const qs = tenant ? `?tenant=${encodeURIComponent(tenant)}` : '';
    return this.get(`/v1/policies/${encodeURIComponent(version)}${qs}`);
  }
}
