/**
 * Integration suite against the real gateway.
 *
 * Spawns `actiongov serve` on an ephemeral port over a scaffolded demo
 * deployment, then exercises the console acceptance behavior end to end:
 * queue visibility within one poll, approval releasing a blocked commit,
 * cross-console resolution consistency, and what-if parity with the CLI.
 */

import { execFile, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { promisify } from 'node:util';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { GatewayClient } from '../src/api';
import { ApprovalQueueStore } from '../src/store';
import { runWhatIf, tightenProgram } from '../src/whatif';

const execFileP = promisify(execFile);
const PYTHON = process.env.PYTHON ?? 'python3';
const CLI = ['-m', 'actiongov.gateway.cli'];
const POLL_MS = 1000;

let deployDir: string;
let configPath: string;
let server: ChildProcess;
let baseUrl: string;
let approverToken: string;
let client: GatewayClient;

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}

async function waitForHealth(url: string, timeoutMs = 15_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${url}/v1/health`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await sleep(100);
  }
  throw new Error(`gateway at ${url} never became healthy`);
}

beforeAll(async () => {
  deployDir = mkdtempSync(join(tmpdir(), 'console-it-'));
  await execFileP(PYTHON, [...CLI, 'init', '--dir', deployDir]);
  configPath = join(deployDir, 'config.json');
  const config = JSON.parse(readFileSync(configPath, 'utf-8'));
  approverToken = config.approvers.alice.token;

  server = spawn(PYTHON, [...CLI, 'serve', '--config', configPath, '--port', '0'], {
    stdio: ['ignore', 'pipe', 'pipe'],
  });
  baseUrl = await new Promise<string>((resolve, reject) => {
    const onData = (chunk: Buffer) => {
      const match = chunk.toString().match(/serving on (http:\/\/[\d.]+:\d+)/);
      if (match) resolve(match[1]);
    };
    server.stdout!.on('data', onData);
    server.on('exit', (code) => reject(new Error(`gateway exited early (${code})`)));
    setTimeout(() => reject(new Error('gateway never printed its address')), 15_000);
  });
  await waitForHealth(baseUrl);
  client = new GatewayClient(baseUrl, approverToken);
}, 40_000);

afterAll(async () => {
  server?.kill('SIGTERM');
  await sleep(200);
  server?.kill('SIGKILL');
});

const EMAIL = {
  actor: 'agent:mailer',
  operation: 'email.send',
  resource: 'a@x.com',
  parameters: { subject: 'hi', body: 'ok' },
};

describe('console queue (secondary acceptance)', () => {
  it(
    'shows a new deferral within one poll, approve unblocks a waiting commit, ' +
      'and two consoles never disagree',
    async () => {
      const consoleA = new ApprovalQueueStore(client, 'acme');
      const consoleB = new ApprovalQueueStore(new GatewayClient(baseUrl, approverToken), 'acme');
      consoleA.startPolling(POLL_MS);
      consoleB.startPolling(POLL_MS);
      try {
        const deferred = await client.commit({ ...EMAIL, mode: 'deferred' });
        expect(deferred.decision).toBe('defer');
        const hash = deferred.hash;

        // visible on both consoles within one poll interval
        await sleep(POLL_MS + 300);
        expect(consoleA.getState().pending.map((p) => p.hash)).toContain(hash);
        expect(consoleB.getState().pending.map((p) => p.hash)).toContain(hash);

        // a second caller blocks inline on the same action
        const blocked = client.commit({ ...EMAIL, mode: 'inline', deadline_ms: 20_000 });
        await sleep(250);

        // console A approves; console B races a reject immediately after
        const [resA, resB] = await Promise.all([
          consoleA.resolve(hash, 'approve'),
          (async () => {
            await sleep(60);
            return consoleB.resolve(hash, 'reject');
          })(),
        ]);

        const decisions = [resA, resB].filter(Boolean).map((r) => r!.decision);
        expect(new Set(decisions).size).toBe(1); // never conflicting
        expect(decisions[0]).toBe('permit');
        const flagged = [resA, resB].filter((r) => r?.already_resolved);
        expect(flagged.length).toBeLessThanOrEqual(1);

        const unblocked = await blocked;
        expect(unblocked.decision).toBe('permit');
        expect(unblocked.artifact).toBeTruthy();

        // the row disappears from both consoles within one poll interval
        await sleep(POLL_MS + 300);
        expect(consoleA.getState().pending.map((p) => p.hash)).not.toContain(hash);
        expect(consoleB.getState().pending.map((p) => p.hash)).not.toContain(hash);
        expect(consoleA.getState().resolutions.get(hash)?.decision).toBe('permit');
      } finally {
        consoleA.stopPolling();
        consoleB.stopPolling();
      }
    },
    40_000,
  );

  it('reject verdicts propagate symmetrically', async () => {
    const deferred = await client.commit({
      ...EMAIL,
      parameters: { subject: 'risky', body: 'later' },
      mode: 'deferred',
    });
    const res = await client.resolve(deferred.hash, 'reject');
    expect(res.decision).toBe('deny');
    expect(res.artifact_issued).toBe(false);
  });
});

describe('ledger panel data', () => {
  it('verify endpoint backs the chain badge', async () => {
    const report = await client.verifyLedger();
    expect(report.ok).toBe(true);
    expect(report.records_checked).toBeGreaterThan(0);
    const records = await client.ledger();
    expect(records.length).toBe(report.records_checked);
  });
});

describe('what-if panel (secondary acceptance)', () => {
  it(
    'tightened flip report matches the CLI replay output record-for-record',
    async () => {
      // some more history so the report is non-trivial
      await client.commit({
        actor: 'agent:web',
        operation: 'http.request',
        resource: 'https://api.example.com/whatif',
      });
      await client.commit({
        actor: 'agent:billing',
        operation: 'refund',
        resource: 'cust-9',
        parameters: { amount: 400 },
      });

      const active = await client.policy('policies:v12');
      const candidate = tightenProgram(active.program);
      const panel = await runWhatIf(client, { tenant: 'acme', policy: candidate });
      expect(panel.flipped).toBeGreaterThan(0);

      const { stdout } = await execFileP(PYTHON, [
        ...CLI, 'replay', '--config', configPath, '--range', 'all', '--tightened',
      ]);
      const cliRows = stdout
        .trim()
        .split('\n')
        .filter((line) => line.startsWith('{'))
        .map((line) => JSON.parse(line) as {
          seq: number; recorded: string; replayed: string; flipped: boolean;
        });

      expect(panel.results.length).toBe(cliRows.length);
      for (let i = 0; i < cliRows.length; i += 1) {
        expect(panel.results[i].seq).toBe(cliRows[i].seq);
        expect(panel.results[i].recorded).toBe(cliRows[i].recorded);
        expect(panel.results[i].replayed).toBe(cliRows[i].replayed);
        expect(panel.results[i].flipped).toBe(cliRows[i].flipped);
      }
      const cliFlips = cliRows.filter((r) => r.flipped).length;
      expect(panel.flipped).toBe(cliFlips);
    },
    40_000,
  );

  it('replay is read-only: the panel appends nothing', async () => {
    const before = await client.verifyLedger();
    await runWhatIf(client, { tenant: 'acme' });
    const after = await client.verifyLedger();
    expect(after.records_checked).toBe(before.records_checked);
    expect(after.ok).toBe(true);
  });
});
