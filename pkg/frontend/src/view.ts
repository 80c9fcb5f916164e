/**
 * DOM rendering. Everything displayed comes from gateway responses held in
 * the store; handlers delegate straight back to store/client methods.
 */

import type { QueueState } from './store';
import type { LedgerRecord, ReplayReport, VerifyReport } from './types';

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function shortHash(hash: string): string {
  return `${hash.slice(0, 10)}…${hash.slice(-6)}`;
}

export function renderBanner(target: HTMLElement, state: QueueState): void {
  target.innerHTML = '';
  if (state.banner) {
    target.appendChild(el('div', 'banner banner-error', state.banner));
  }
}

export function renderQueue(
  target: HTMLElement,
  state: QueueState,
  onResolve: (hash: string, verdict: 'approve' | 'reject') => void,
): void {
  target.innerHTML = '';
  if (!state.pending.length) {
    target.appendChild(el('p', 'empty', 'No deferred actions waiting for approval.'));
  }
  for (const item of state.pending) {
    const card = el('div', 'card pending-card');
    card.dataset.hash = item.hash;
    const title = el('div', 'card-title', `${item.operation} → ${item.resource}`);
    const meta = el(
      'div',
      'card-meta',
      `tenant ${item.tenant} · blast ${item.blast_radius} · waiters ${item.waiters} · ${shortHash(item.hash)}`,
    );
    const params = el('pre', 'card-params', JSON.stringify(item.parameters, null, 1));
    const actions = el('div', 'card-actions');
    const approve = el('button', 'btn btn-approve', 'Approve') as HTMLButtonElement;
    const reject = el('button', 'btn btn-reject', 'Reject') as HTMLButtonElement;
    const armed = state.connected && !state.inFlight.has(item.hash);
    approve.disabled = !armed;
    reject.disabled = !armed;
    approve.onclick = () => onResolve(item.hash, 'approve');
    reject.onclick = () => onResolve(item.hash, 'reject');
    actions.append(approve, reject);
    card.append(title, meta, params, actions);
    target.appendChild(card);
  }
  const resolved = el('div', 'resolved-list');
  for (const [hash, res] of state.resolutions) {
    const line = el(
      'div',
      `resolved resolved-${res.decision}`,
      `${shortHash(hash)} → ${res.decision.toUpperCase()}` +
        (res.already_resolved ? ' (already resolved)' : '') +
        (res.artifact_issued ? ' · artifact issued' : ''),
    );
    resolved.appendChild(line);
  }
  target.appendChild(resolved);
}

export function renderLedger(
  target: HTMLElement,
  records: LedgerRecord[],
  verify: VerifyReport,
): void {
  target.innerHTML = '';
  const badge = verify.ok
    ? el('div', 'badge badge-ok', `chain intact · ${verify.records_checked} records`)
    : el('div', 'badge badge-broken', `chain BROKEN at seq ${verify.first_broken_seq}`);
  target.appendChild(badge);
  const table = el('table', 'ledger-table');
  const head = el('tr');
  for (const col of ['seq', 'decision', 'h_A', 'v_P', 'chain']) {
    head.appendChild(el('th', undefined, col));
  }
  table.appendChild(head);
  for (const record of records) {
    const row = el('tr', `row-${record.decision.toLowerCase()}`);
    const broken = !verify.ok && verify.first_broken_seq !== null && record.seq >= verify.first_broken_seq;
    row.appendChild(el('td', undefined, String(record.seq)));
    row.appendChild(el('td', undefined, record.decision));
    row.appendChild(el('td', 'mono', shortHash(record.h_a)));
    row.appendChild(el('td', undefined, record.v_p));
    row.appendChild(el('td', broken ? 'chain-broken' : 'chain-ok', broken ? '✗' : '✓'));
    table.appendChild(row);
  }
  target.appendChild(table);
}

export function renderWhatIf(target: HTMLElement, report: ReplayReport | null): void {
  target.innerHTML = '';
  if (!report) {
    target.appendChild(el('p', 'empty', 'Pick a policy version and run a replay.'));
    return;
  }
  target.appendChild(
    el('div', 'whatif-summary', `replayed ${report.total} records, ${report.flipped} flipped`),
  );
  const table = el('table', 'whatif-table');
  const head = el('tr');
  for (const col of ['seq', 'recorded', 'replayed', 'rule', '']) {
    head.appendChild(el('th', undefined, col));
  }
  table.appendChild(head);
  for (const row of report.results) {
    const tr = el('tr', row.flipped ? 'flip' : undefined);
    tr.appendChild(el('td', undefined, String(row.seq)));
    tr.appendChild(el('td', undefined, row.recorded));
    tr.appendChild(el('td', undefined, row.replayed));
    tr.appendChild(el('td', undefined, row.matched_rule));
    tr.appendChild(el('td', undefined, row.flipped ? 'FLIP' : ''));
    table.appendChild(tr);
  }
  target.appendChild(table);
}
