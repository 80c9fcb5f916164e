/**
 * Console entry point: wires the gateway client, the polling store, and the
 * three panels (approval queue, ledger browser, what-if replay).
 *
 * Configuration comes from the URL (?gateway=…&token=…&tenant=…) with
 * sensible localhost defaults for development.
 */

import { GatewayClient } from './api';
import { ApprovalQueueStore } from './store';
import { renderBanner, renderLedger, renderQueue, renderWhatIf } from './view';
import { runWhatIf } from './whatif';
import type { ConsoleConfig } from './types';

function configFromLocation(): ConsoleConfig {
  const params = new URLSearchParams(window.location.search);
  return {
    baseUrl: params.get('gateway') ?? 'http://127.0.0.1:8787',
    approverToken: params.get('token') ?? '',
    tenant: params.get('tenant') ?? undefined,
    pollIntervalMs: Number(params.get('poll') ?? '1000'),
  };
}

function mount(): void {
  const config = configFromLocation();
  const client = new GatewayClient(config.baseUrl, config.approverToken);
  const store = new ApprovalQueueStore(client, config.tenant);

  const bannerHost = document.getElementById('banner')!;
  const queueHost = document.getElementById('queue')!;
  const ledgerHost = document.getElementById('ledger')!;
  const whatifHost = document.getElementById('whatif-results')!;

  const onResolve = (hash: string, verdict: 'approve' | 'reject') => {
    void store.resolve(hash, verdict);
  };
  store.subscribe((state) => {
    renderBanner(bannerHost, state);
    renderQueue(queueHost, state, onResolve);
  });
  store.startPolling(config.pollIntervalMs);

  const refreshLedger = async () => {
    try {
      const [records, verify] = await Promise.all([
        client.ledger(config.tenant),
        client.verifyLedger(config.tenant),
      ]);
      renderLedger(ledgerHost, records, verify);
    } catch {
      ledgerHost.textContent = 'ledger unavailable';
    }
  };
  void refreshLedger();
  setInterval(() => void refreshLedger(), Math.max(config.pollIntervalMs * 3, 3000));

  const runButton = document.getElementById('whatif-run') as HTMLButtonElement;
  const versionInput = document.getElementById('whatif-version') as HTMLInputElement;
  runButton.onclick = async () => {
    runButton.disabled = true;
    try {
      const report = await runWhatIf(client, {
        tenant: config.tenant,
        policyVersion: versionInput.value || undefined,
      });
      renderWhatIf(whatifHost, report);
    } catch (err) {
      whatifHost.textContent = `replay failed: ${err instanceof Error ? err.message : err}`;
    } finally {
      runButton.disabled = false;
    }
  };
}

document.addEventListener('DOMContentLoaded', mount);
