import { FetchLike } from "../src/api";
import { Task } from "../src/types";

export function makeTask(id: number, overrides: Partial<Task> = {}): Task {
    return {
        task_id: `task-${id}`,
        generation_id: `g${id}`,
        text_l1: `english sentence ${id}`,
        text_l2: `hindi vaaky ${id}`,
        text_cs: `mixed sentence ${id}`,
        assigned_to: "e1",
        state: "assigned",
        expires_at: 10_000,
        ...overrides,
    };
}

export function jsonResponse(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
        status,
        headers: { "Content-Type": "application/json" },
    });
}

export interface RecordedCall {
    url: string;
    method: string;
    body: unknown;
}

/** Scripted fetch double: pops one canned reply per call and records requests. */
export function scriptedFetch(
    script: Array<Response | Error>,
): { fetchImpl: FetchLike; calls: RecordedCall[] } {
    const calls: RecordedCall[] = [];
    const fetchImpl: FetchLike = async (url, init) => {
        calls.push({
            url,
            method: init?.method ?? "GET",
            body: init?.body ? JSON.parse(String(init.body)) : undefined,
        });
        const next = script.shift();
        if (next === undefined) throw new Error(`unscripted fetch call to ${url}`);
        if (next instanceof Error) throw next;
        return next;
    };
    return { fetchImpl, calls };
}
