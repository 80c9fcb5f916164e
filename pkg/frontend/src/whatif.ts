/**
 * What-if panel logic: counterfactual replay against a selected policy.
 * Strictly read-only — the panel posts to /v1/replay, which appends nothing.
 */

import { GatewayClient } from './api';
import type { ReplayReport, ReplayRow } from './types';

export interface WhatIfRequest {
  tenant?: string;
  policyVersion?: string;
  /** inline program source, e.g. a tightened candidate not yet published */
  policy?: unknown;
  range?: [number, number];
  hash?: string;
}

export async function runWhatIf(client: GatewayClient, req: WhatIfRequest): Promise<ReplayReport> {
  const body: Record<string, unknown> = { state: 'as-recorded' };
  if (req.tenant) body.tenant = req.tenant;
  if (req.policyVersion) body.policy_version = req.policyVersion;
  if (req.policy) body.policy = req.policy;
  if (req.hash) body.selector = { hash: req.hash };
  else if (req.range) body.selector = { range: req.range };
  else body.selector = 'all';
  return client.replay(body);
}

/** Render-ready summary line, e.g. "replayed 12 records, 3 flipped". */
export function flipSummary(report: ReplayReport): string {
  return `replayed ${report.total} records, ${report.flipped} flipped`;
}

interface PolicyProgramSource {
  version_id: string;
  tenant_id: string;
  rules: unknown[];
}

/**
 * One-click "tightened" candidate: deny email and shell outright, cap refunds
 * above 250. Must stay byte-equivalent to the backend's demo transform — the
 * integration suite asserts the resulting flip report matches the CLI
 * record-for-record.
 */
export function tightenProgram(program: PolicyProgramSource): PolicyProgramSource {
  return {
    ...program,
    version_id: `${program.version_id}-tight`,
    rules: [
      {
        rule_id: 'tighten-deny-email',
        kind: 'static',
        match: { operation: 'email.send' },
        effect: 'deny',
      },
      {
        rule_id: 'tighten-deny-shell',
        kind: 'static',
        match: { operation: 'shell.exec' },
        effect: 'deny',
      },
      {
        rule_id: 'tighten-cap-refunds',
        kind: 'static',
        match: { operation: 'refund', 'parameters.amount': { gt: 250 } },
        effect: 'deny',
      },
      ...program.rules,
    ],
  };
}

/** Rows ordered by seq; flipped rows first when requested. */
export function orderRows(report: ReplayReport, flippedFirst = false): ReplayRow[] {
  const rows = [...report.results].sort((a, b) => a.seq - b.seq);
  if (!flippedFirst) return rows;
  return [...rows.filter((r) => r.flipped), ...rows.filter((r) => !r.flipped)];
}
