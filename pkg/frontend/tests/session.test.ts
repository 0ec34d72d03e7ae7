import { describe, expect, it } from "vitest";

import { StudyClient } from "../src/api";
import { SessionRunner } from "../src/session";
import { ApiError, IncompleteDraftError } from "../src/types";
import { MockService } from "./mockService";

function makeRunner(service: MockService, token?: string): SessionRunner {
  const client = new StudyClient({ token, fetchFn: service.fetchFn });
  return new SessionRunner(client);
}

function rateAll(runner: SessionRunner, value = 2, utility = 4): void {
  for (const dim of runner.schema!.dimensions) runner.setScore(dim, value);
  runner.setUtility(utility);
}

describe("session runner", () => {
  it("completes a 24-case session with 24 acknowledgements", async () => {
    const service = new MockService();
    const runner = makeRunner(service);
    await runner.start("P000", 7);

    const seen: string[] = [];
    while (!runner.done) {
      const served = runner.current!;
      seen.push(served.case_id);
      expect(served.position).toBe(seen.length);
      rateAll(runner);
      const ack = await runner.submit();
      expect(ack.ok).toBe(true);
      expect(ack.resubmission).toBe(false);
      expect(ack.cursor).toBe(seen.length);
    }

    expect(seen).toHaveLength(24);
    expect(new Set(seen).size).toBe(24);
    expect(runner.acks).toHaveLength(24);
    expect(service.assessments.size).toBe(24);
    expect(runner.progress).toEqual({ position: 24, total: 24 });
  });

  it("refuses submission while any dimension is unset", async () => {
    const service = new MockService();
    const runner = makeRunner(service);
    await runner.start("P001");

    for (const dim of runner.schema!.dimensions) {
      if (dim !== "omissions") runner.setScore(dim, 2);
    }
    runner.setUtility(3);
    const postsBefore = service.requests.filter((r) => r.method === "POST").length;
    await expect(runner.submit()).rejects.toThrow(IncompleteDraftError);
    await expect(runner.submit()).rejects.toThrow(/omissions/);

    // refusal is local: nothing was sent and nothing advanced
    const postsAfter = service.requests.filter((r) => r.method === "POST").length;
    expect(postsAfter).toBe(postsBefore);
    expect(service.assessments.size).toBe(0);
    expect(runner.current!.position).toBe(1);

    runner.setScore("omissions", 1);
    const ack = await runner.submit();
    expect(ack.cursor).toBe(1);
  });

  it("treats unset utility like an unset dimension", async () => {
    const runner = makeRunner(new MockService());
    await runner.start("P002");
    for (const dim of runner.schema!.dimensions) runner.setScore(dim, 3);
    expect(runner.missingFields()).toEqual(["utility"]);
    await expect(runner.submit()).rejects.toThrow(/utility/);
  });

  it("survives a mid-session refresh without duplicates", async () => {
    const service = new MockService();
    const first = makeRunner(service);
    await first.start("P000", 3);
    const sessionId = first.id!;
    const before: string[] = [];
    for (let i = 0; i < 9; i++) {
      before.push(first.current!.case_id);
      rateAll(first, 2, 5);
      await first.submit();
    }

    // a refresh builds a new runner that resumes by session id
    const second = makeRunner(service);
    await second.resume(sessionId);
    expect(second.current!.position).toBe(10);

    const after: string[] = [];
    while (!second.done) {
      after.push(second.current!.case_id);
      rateAll(second, 1, 2);
      await second.submit();
    }

    expect(before.length + after.length).toBe(24);
    expect(new Set([...before, ...after]).size).toBe(24);
    expect(service.assessments.size).toBe(24);
    const resubmissions = second.acks.filter((a) => a.resubmission);
    expect(resubmissions).toHaveLength(0);
  });

  it("resume of an unknown session id surfaces the 404", async () => {
    const runner = makeRunner(new MockService());
    await expect(runner.resume("Snope")).rejects.toMatchObject({
      status: 404,
    });
  });

  it("rejects out-of-range scores client-side", async () => {
    const runner = makeRunner(new MockService());
    await runner.start("P000");
    expect(() => runner.setScore("jargon", 9)).toThrow(/1\.\.3/);
    expect(() => runner.setScore("made_up", 2)).toThrow(/unknown dimension/);
    expect(() => runner.setUtility(0)).toThrow(/1\.\.5/);
  });
});

describe("study client", () => {
  it("sends the shared token and maps auth failures", async () => {
    const service = new MockService(undefined, { token: "sekrit" });
    const good = new StudyClient({ token: "sekrit", fetchFn: service.fetchFn });
    expect((await good.health()).ok).toBe(true);
    expect((await good.schema()).dimensions).toHaveLength(6);

    const bad = new StudyClient({ token: "wrong", fetchFn: service.fetchFn });
    await expect(bad.schema()).rejects.toMatchObject({ status: 401 });
    await expect((await bad.health()).ok).toBe(true); // health is open
  });

  it("maps pool shortage to a 409 with deficits", async () => {
    const service = new MockService([]);
    const client = new StudyClient({ fetchFn: service.fetchFn });
    try {
      await client.createSession("P000");
      expect.unreachable("should have thrown");
    } catch (err) {
      const apiErr = err as ApiError;
      expect(apiErr.status).toBe(409);
      expect(apiErr.detail).toMatchObject({
        deficits: { own: { need: 12, have: 0 } },
      });
    }
  });

  it("maps validation failures to 422 with the server message", async () => {
    const service = new MockService();
    const client = new StudyClient({ fetchFn: service.fetchFn });
    const session = await client.createSession("P000");
    const served = await client.nextCase(session.session_id);
    if (served.done) throw new Error("expected a case");
    await expect(
      client.submitAssessment(session.session_id, served.case_id, {}, 3),
    ).rejects.toMatchObject({ status: 422 });
  });
});
