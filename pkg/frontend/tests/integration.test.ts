/**
 * End-to-end annotation loop against a live annotation server.
 *
 * Spawns the Python service, then drives the real client/session stack over
 * HTTP: 3 evaluators fully rate 5 generations (15 ratings), uniqueness is
 * enforced server-side (a 4th attempt conflicts), and the export feeds the
 * agreement statistic directly.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { AnnotationClient, ConflictError } from "../src/api";
import { AnnotationSession } from "../src/session";
import { Score } from "../src/types";

const PORT = 18700 + (process.pid % 1000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;

function jsonl(rows: object[]): string {
    return rows.map((row) => JSON.stringify(row)) .join("\n") + "\n";
}

async function waitForHealth(timeoutMs = 20_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            const response = await fetch(`${BASE}/health`);
            if (response.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((resolve) => setTimeout(resolve, 200));
    }
    throw new Error(`annotation server did not come up on ${BASE}`);
}

beforeAll(async () => {
    const dir = mkdtempSync(join(tmpdir(), "annoui-"));
    const corpus = join(dir, "corpus.jsonl");
    const generations = join(dir, "generations.jsonl");
    writeFileSync(
        corpus,
        jsonl(
            Array.from({ length: 5 }, (_, k) => ({
                id: `s${k}`,
                text_l1: `english sentence ${k}`,
                text_l2: `hindi vaaky ${k}`,
            })),
        ),
    );
    writeFileSync(
        generations,
        jsonl(
            Array.from({ length: 5 }, (_, k) => ({
                id: `g${k}`,
                input_id: `s${k}`,
                method: "ezswitch",
                model: "llama3",
                direction: "l1_to_cs",
                text_cs: `mixed sentence ${k}`,
                constraint_words: ["vaaky"],
                prompt_hash: "",
                decode_params: {},
            })),
        ),
    );
    server = spawn(
        "python3",
        [
            "-m", "cswitch.cli", "serve",
            "--pairs", corpus,
            "--generations", generations,
            "--evaluators", "e1,e2,e3,e4",
            "--journal", join(dir, "journal.jsonl"),
            "--port", String(PORT),
        ],
        { stdio: ["ignore", "pipe", "pipe"] },
    );
    server.stderr?.on("data", () => undefined);
    await waitForHealth();
});

afterAll(() => {
    server?.kill("SIGTERM");
});

describe("annotation loop against a live server", () => {
    it("completes 15 ratings, enforces uniqueness, and exports agreement", async () => {
        const scoreFor = (generationId: string): Score =>
            ((1 + (Number(generationId.slice(1)) % 3)) as Score);

        for (const evaluator of ["e1", "e2", "e3"]) {
            const session = new AnnotationSession(new AnnotationClient(BASE), evaluator);
            await session.start();
            let guard = 0;
            while (session.snapshot().state === "rating" && guard < 10) {
                const task = session.snapshot().task!;
                const score = scoreFor(task.generation_id);
                session.selectScore("accuracy", score);
                session.selectScore("fluency", score);
                await session.submitAndAdvance();
                guard += 1;
            }
            expect(session.snapshot().state).toBe("queue-empty");
            expect(session.snapshot().submittedCount).toBe(5);
        }

        const client = new AnnotationClient(BASE);

        // every generation is saturated: the 4th evaluator gets nothing
        expect(await client.fetchTask("e4")).toBeNull();

        // a forged 4th rating on an already-closed task conflicts
        await expect(
            client.submitRating({ task_id: "task-1", evaluator_id: "e4", accuracy: 2, fluency: 2 }),
        ).rejects.toBeInstanceOf(ConflictError);

        const exported = await client.fetchExport();
        expect(exported).toHaveLength(15);
        const byGeneration = new Map<string, number[]>();
        for (const rating of exported) {
            const bucket = byGeneration.get(rating.generation_id) ?? [];
            bucket.push(rating.accuracy);
            byGeneration.set(rating.generation_id, bucket);
        }
        expect(byGeneration.size).toBe(5);
        for (const scores of byGeneration.values()) {
            expect(scores).toHaveLength(3); // exactly three unique evaluators each
        }

        // identical per-generation ratings: the server-computed alpha is exactly 1
        const agreement = await client.fetchAgreement();
        expect(agreement.accuracy.alpha).toBe(1.0);
        expect(agreement.fluency.alpha).toBe(1.0);
    });
});
