/**
 * Wire types mirroring the gateway's JSON responses.
 * Every rendered field comes from these shapes; the console never derives
 * or mutates decision data on its own.
 */

export type DecisionWord = 'permit' | 'defer' | 'deny';

export interface PendingAction {
  hash: string;
  tenant: string;
  operation: string;
  resource: string;
  blast_radius: string;
  parameters: Record<string, unknown>;
  waiting_since: number;
  waiting_since_iso?: string;
  waiters: number;
  seq: number | null;
}

export interface CommitResponse {
  decision: DecisionWord;
  explanation: string;
  hash: string;
  timestamp: string;
  matched_rule?: string;
  deduplicated?: boolean;
  pending?: boolean;
  seq?: number;
  artifact?: string;
  enforcing?: boolean;
  tenant?: string;
}

export interface ResolutionResponse {
  decision: DecisionWord;
  explanation: string;
  hash: string;
  timestamp: string;
  seq: number | null;
  already_resolved: boolean;
  artifact_issued: boolean;
}

export interface LedgerRecord {
  seq: number;
  h_a: string;
  v_p: string;
  h_s: string;
  decision: 'PERMIT' | 'DEFER' | 'DENY';
  ts: number;
  lc: number;
  prev: string;
  record_hash: string;
}

export interface VerifyReport {
  tenant: string;
  ok: boolean;
  first_broken_seq: number | null;
  records_checked: number;
}

export interface ReplayRow {
  seq: number;
  hash: string;
  recorded: string;
  replayed: string;
  matched_rule: string;
  flipped: boolean;
}

export interface ReplayReport {
  tenant: string;
  total: number;
  flipped: number;
  flips: [number, string, string][];
  results: ReplayRow[];
}

export interface PolicyInfo {
  tenant: string;
  version_id: string;
  active: boolean;
  program: { version_id: string; tenant_id: string; rules: unknown[] };
}

export interface ConsoleConfig {
  baseUrl: string;
  approverToken: string;
  tenant?: string;
  pollIntervalMs: number;
}
