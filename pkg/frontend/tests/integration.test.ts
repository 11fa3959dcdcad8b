/** Full review loop against the real Python QC service on a fixture dataset:
 * three samples (video, image, video), MP hidden for the image, and the
 * stats panel matching GET /api/stats exactly.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { QcClient } from "../src/api.js";
import { ReviewController } from "../src/review.js";
import { formatStats } from "../src/statsPanel.js";
import type { QualityStats } from "../src/types.js";

const PYTHON = process.env.QC_PYTHON ?? "python3";
const PORT = 8873 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

function pythonAvailable(): boolean {
  const probe = spawnSync(PYTHON, ["-c", "import vividforge"], { timeout: 20000 });
  return probe.status === 0;
}

const haveService = pythonAvailable();
let server: ChildProcess | null = null;
let datasetDir: string | null = null;

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 20000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/stats`);
      if (response.status === 200) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("qc service did not come up in time");
}

beforeAll(async () => {
  if (!haveService) return;
  datasetDir = mkdtempSync(join(tmpdir(), "qc-ui-fixture-"));
  const built = spawnSync(
    PYTHON,
    [join(__dirname, "fixtures", "make_dataset.py"), datasetDir],
    { timeout: 60000 },
  );
  if (built.status !== 0) {
    throw new Error(`fixture build failed: ${built.stderr}`);
  }
  server = spawn(PYTHON, [
    "-m",
    "vividforge.cli",
    "serve-qc",
    "--manifest",
    join(datasetDir, "manifest.jsonl"),
    "--verdicts",
    join(datasetDir, "verdicts.jsonl"),
    "--port",
    String(PORT),
  ]);
  await waitForServer();
}, 90000);

afterAll(() => {
  server?.kill();
  if (datasetDir) rmSync(datasetDir, { recursive: true, force: true });
});

describe.runIf(haveService)("against the real qc service", () => {
  it(
    "completes a 3-sample review loop with correct MP visibility and live stats",
    async () => {
      const client = new QcClient(BASE);
      const controller = new ReviewController(client, "ui-reviewer");
      await controller.start();

      const mpSeen: Record<string, boolean> = {};
      const order: string[] = [];
      while (controller.view().phase === "reviewing") {
        const view = controller.view();
        const id = view.sample!.sample.id;
        order.push(id);
        mpSeen[id] = view.mpApplicable;
        controller.toggle("mg");
        controller.toggle("ta");
        if (view.mpApplicable) controller.toggle("mp");
        await controller.submit();
      }

      expect(order).toEqual(["vid-a", "img-b", "vid-c"]);
      expect(mpSeen).toEqual({ "vid-a": true, "img-b": false, "vid-c": true });
      expect(controller.view().phase).toBe("done");

      const raw = (await (await fetch(`${BASE}/api/stats`)).json()) as QualityStats;
      expect(controller.view().stats).toEqual(raw);
      expect(formatStats(controller.view().stats)).toBe(formatStats(raw));
      expect(raw).toEqual({
        mg_rate: 1.0,
        mp_rate: 1.0,
        ta_rate: 1.0,
        hq_rate: 1.0,
        n_reviewed: 3,
      });
    },
    60000,
  );

  it("serves sample media as PNG", async () => {
    const payload = await new QcClient(BASE).fetchNext("media-checker");
    expect(payload).toHaveProperty("media");
    const url = (payload as { media: { frames: string[] } }).media.frames[0]!;
    const response = await fetch(`${BASE}${url}`);
    expect(response.status).toBe(200);
    expect(response.headers.get("content-type")).toBe("image/png");
  });
});

describe.runIf(!haveService)("service unavailable", () => {
  it.skip("integration requires the python package on PATH", () => {});
});
