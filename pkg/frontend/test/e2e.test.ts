import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtemp, readFile, writeFile } from "node:fs/promises";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import type { ProfileCard, QuestionPayload, Side } from "../src/api";
import { ApiError, SurveyApi } from "../src/api";

const run = promisify(execFile);

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port assigned"));
        return;
      }
      probe.close(() => resolve(address.port));
    });
  });
}

async function waitForHealth(base: string, timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const reply = await fetch(`${base}/healthz`);
      if (reply.ok) return;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service did not come up within ${timeoutMs}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
}

// deterministic responder: lower level indexes are better, ties go left
const LEVEL_UTILITY = [2, 1, 0];

function utility(card: ProfileCard): number {
  return card.levels.reduce((sum, level) => sum + (LEVEL_UTILITY[level] ?? 0), 0);
}

function preferredSide(left: ProfileCard, right: ProfileCard): Side {
  return utility(right) > utility(left) ? "right" : "left";
}

let server: ChildProcess | null = null;
let serverLog = "";
let base = "";
let workdir = "";

beforeAll(async () => {
  workdir = await mkdtemp(join(tmpdir(), "respondent-ui-e2e-"));
  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "acbckit",
    [
      "--seed",
      "123",
      "serve",
      "--study",
      "e2e",
      "--storage",
      workdir,
      "--port",
      String(port),
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  server.stderr?.on("data", (chunk: Buffer) => (serverLog += chunk.toString()));
  try {
    await waitForHealth(base);
  } catch (err) {
    throw new Error(`${String(err)}\nserver output:\n${serverLog}`);
  }
}, 60_000);

afterAll(async () => {
  if (server === null) return;
  const exited = new Promise((resolve) => server?.once("exit", resolve));
  server.kill("SIGTERM");
  await Promise.race([exited, new Promise((r) => setTimeout(r, 5_000))]);
  server.kill("SIGKILL");
});

describe("scripted respondent session", () => {
  it(
    "answers the byo question and fifteen choice tasks, and the saved record " +
      "replays to the champion the service reported",
    async () => {
      const api = new SurveyApi(base, { retryDelayMs: 25 });
      const { sessionId, question } = await api.createSession("e2e", "pilot");
      expect(question.attributes).toHaveLength(4);
      expect(question.prompt).toContain("typically");

      // refreshing before answering re-serves the byo form
      const before = await api.next(sessionId);
      expect(before.phase).toBe("AwaitingBYO");

      const byoLevels = [0, 1, 2, 0];
      let payload = await api.submitByo(sessionId, byoLevels);
      const seen: number[] = [];
      let guard = 0;
      while (payload.phase === "InTournament" && guard < 30) {
        guard += 1;
        seen.push(payload.task_index);
        expect(payload.total_tasks).toBe(15);
        // a reload mid-survey lands on the same task
        const resumed = await api.next(sessionId);
        expect(resumed).toEqual(payload);
        const side = preferredSide(payload.left, payload.right);
        payload = await api.submitChoice(sessionId, side, payload.task_index);
      }

      expect(payload.phase).toBe("Complete");
      if (payload.phase !== "Complete") return;
      expect(seen).toEqual(Array.from({ length: 15 }, (_, i) => i + 1));
      expect(payload.session_id).toBe(sessionId);
      const champion = payload.champion;

      // refreshing after the last answer shows the same completion summary
      const after = await api.next(sessionId);
      expect(after).toEqual(payload);

      // the persisted record round-trips through the export
      const exported = await (await fetch(`${base}/studies/e2e/records.jsonl`)).text();
      const lines = exported.trim().split("\n");
      expect(lines).toHaveLength(1);
      const record = JSON.parse(lines[0] ?? "") as {
        id: string;
        population_tag: string;
        byo: number[];
        field: number[][];
        winners: string[];
      };
      expect(record.id).toBe(sessionId);
      expect(record.population_tag).toBe("pilot");
      expect(record.byo).toEqual(byoLevels);
      expect(record.field).toHaveLength(16);
      expect(record.winners).toHaveLength(15);

      // a transitive responder's champion is a highest-utility field entry
      expect(record.field).toContainEqual(champion.levels);
      const fieldBest = Math.max(
        ...record.field.map((levels) => utility({ levels, description: {} })),
      );
      expect(utility({ levels: champion.levels, description: {} })).toBe(fieldBest);

      const recordsPath = join(workdir, "exported.jsonl");
      await writeFile(recordsPath, exported);

      // replaying the stored winners over the stored field must reproduce
      // the champion the live session reported
      const replayScript = [
        "import json",
        "from acbckit.engine import replay",
        "from acbckit.records import record_from_dict",
        `with open(${JSON.stringify(recordsPath)}) as fh:`,
        "    rec = record_from_dict(json.loads(fh.readline()))",
        "print(json.dumps(replay(rec).champion.to_list()))",
      ].join("\n");
      const replayed = await run("python3", ["-c", replayScript]);
      expect(JSON.parse(replayed.stdout.trim())).toEqual(champion.levels);

      // and the export feeds the analysis pipeline without error
      const designPath = join(workdir, "design.json");
      await run("acbckit", ["--out", designPath, "init-design"]);
      const reportDir = join(workdir, "report");
      const report = await run("acbckit", [
        "--out",
        reportDir,
        "report",
        "--design",
        designPath,
        "--records",
        recordsPath,
        "--population-size",
        "pilot=30",
      ]);
      expect(report.stdout).toContain("pilot");
      const summary = await readFile(join(reportDir, "summary.txt"), "utf8");
      expect(summary.length).toBeGreaterThan(0);
    },
    60_000,
  );

  it(
    "resumes mid-survey and keeps idempotent submissions from advancing twice",
    async () => {
      const api = new SurveyApi(base, { retryDelayMs: 25 });
      const { sessionId } = await api.createSession("e2e", "pilot");
      let payload = await api.submitByo(sessionId, [1, 1, 1, 1]);
      expect(payload.phase).toBe("InTournament");

      // answer three tasks, keeping the third submission's key
      const thirdKey = api.newKey();
      let third: QuestionPayload | null = null;
      for (let task = 1; task <= 3; task += 1) {
        if (payload.phase !== "InTournament") throw new Error("ended early");
        const key = task === 3 ? thirdKey : api.newKey();
        payload = await api.submitChoice(sessionId, "left", task, key);
        if (task === 3) third = payload;
      }

      // replaying the third submission returns the cached reply
      const replayed = await api.submitChoice(sessionId, "left", 3, thirdKey);
      expect(replayed).toEqual(third);

      // and the session still sits at task four, as a fresh tab would see
      const current = await api.next(sessionId);
      expect(current.phase).toBe("InTournament");
      if (current.phase === "InTournament") {
        expect(current.task_index).toBe(4);
      }

      // a stale task index from a slower tab is refused as a conflict
      const stale = await api
        .submitChoice(sessionId, "right", 3)
        .catch((e: unknown) => e);
      expect(stale).toBeInstanceOf(ApiError);
      expect((stale as ApiError).isConflict).toBe(true);

      // so is a byo submission arriving after the tournament started
      const lateByo = await api
        .submitByo(sessionId, [0, 0, 0, 0])
        .catch((e: unknown) => e);
      expect(lateByo).toBeInstanceOf(ApiError);
      expect((lateByo as ApiError).status).toBe(409);

      // the unfinished session does not leak into the export
      const exported = await (await fetch(`${base}/studies/e2e/records.jsonl`)).text();
      const ids = exported
        .trim()
        .split("\n")
        .filter((line) => line.length > 0)
        .map((line) => (JSON.parse(line) as { id: string }).id);
      expect(ids).not.toContain(sessionId);
    },
    60_000,
  );
});
