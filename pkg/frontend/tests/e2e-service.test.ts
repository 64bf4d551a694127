// @vitest-environment node
//
// End-to-end flow against the real backend: spawns the Python service and
// drives the typed client through document -> package -> session -> records
// -> delete -> finish, exactly as the browser screens do.

import { spawn, ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient, ApiError } from "../src/api";
import { SAMPLE_STORIES } from "../src/components/SetupScreen";

const PORT = 8971;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let serverOutput = "";

async function waitForService(timeoutMs: number) {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/catalog`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service did not come up on ${BASE}\n${serverOutput}`);
}

beforeAll(async () => {
  server = spawn(
    "python3",
    [
      "-c",
      "import uvicorn; from secspect.service import create_app; " +
        `uvicorn.run(create_app(), host='127.0.0.1', port=${PORT}, log_level='warning')`,
    ],
    { cwd: "..", stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => (serverOutput += chunk));
  server.stderr?.on("data", (chunk) => (serverOutput += chunk));
  await waitForService(20000);
}, 25000);

afterAll(() => {
  server?.kill();
});

describe("full inspection flow over the live service", () => {
  it("runs document -> package -> session -> records -> finish", async () => {
    const client = new ApiClient(BASE);

    const document = await client.createDocument(SAMPLE_STORIES);
    expect(document.story_ids).toEqual(["US1"]);

    const pkg = await client.createPackage(document.document_id);
    expect(pkg.stories[0].extraction.verbs).toEqual(["export"]);
    expect(pkg.stories[0].properties).toEqual(["C"]);
    expect(pkg.stories[0].rows.map((r) => r.id)).toEqual([
      "C1",
      "C2",
      "C3",
      "C4",
      "C5",
    ]);
    expect(pkg.questions.length).toBe(4);

    const session = await client.startSession(
      pkg.package_id,
      "e2e-inspector",
      "our_approach",
    );
    expect(session.state).toBe("running");

    await client.recordDefect(session.session_id, {
      story_id: "US1",
      defect_type: "O",
      location: "C2",
    });
    await client.recordDefect(session.session_id, {
      story_id: "US1",
      defect_type: "O",
      location: "C4",
    });
    await client.recordDefect(session.session_id, {
      story_id: "US1",
      defect_type: "A",
      location: "SS4",
    });
    await client.recordDefect(session.session_id, {
      story_id: "US1",
      defect_type: "IS",
      location: ["SS2", "SS3"],
    });
    const last = await client.recordDefect(session.session_id, {
      story_id: "US1",
      defect_type: "IF",
      location: "SS5",
    });

    const duplicate = await client
      .recordDefect(session.session_id, {
        story_id: "US1",
        defect_type: "O",
        location: "C2",
      })
      .catch((err) => err);
    expect(duplicate).toBeInstanceOf(ApiError);
    expect(duplicate.code).toBe("DUPLICATE_RECORD");
    expect(duplicate.status).toBe(409);

    let view = await client.getSession(session.session_id);
    expect(view.record_count).toBe(5);
    expect(view.defect_tally).toBe(6);
    expect(view.elapsed_minutes).toBeGreaterThanOrEqual(0);
    expect(view.over_soft_limit).toBe(false);

    await client.deleteDefect(session.session_id, last.index);
    view = await client.getSession(session.session_id);
    expect(view.record_count).toBe(4);
    await client.recordDefect(session.session_id, {
      story_id: "US1",
      defect_type: "IF",
      location: "SS5",
    });

    const finish = await client.finishSession(session.session_id);
    expect(finish.defect_tally).toBe(6);
    expect(finish.duration_minutes).toBeGreaterThan(0);
    expect(finish.rendered[0]).toContain("| X |");
    expect(finish.rendered[0]).toContain("SS2+SS3");

    const after = await client.getSession(session.session_id);
    expect(after.state).toBe("finished");
    const refused = await client
      .finishSession(session.session_id)
      .catch((err) => err);
    expect(refused).toBeInstanceOf(ApiError);
    expect(refused.status).toBe(409);
  }, 30000);
});
