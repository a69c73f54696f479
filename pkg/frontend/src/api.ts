/** Typed client for the annotation service HTTP API. */

import { AgreementReport, RatingSubmission, StoredRating, Task, isScore } from "./types";

export class ApiError extends Error {
    constructor(message: string, readonly status: number) {
        super(message);
        this.name = "ApiError";
    }
}

export class UnauthorizedError extends ApiError {
    constructor(message: string) {
        super(message, 401);
        this.name = "UnauthorizedError";
    }
}

export class ConflictError extends ApiError {
    constructor(message: string) {
        super(message, 409);
        this.name = "ConflictError";
    }
}

export class NetworkError extends Error {
    constructor(message: string) {
        super(message);
        this.name = "NetworkError";
    }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorMessage(response: Response): Promise<string> {
    try {
        const body = (await response.json()) as { error?: string };
        if (body && typeof body.error === "string") return body.error;
    } catch {
        // fall through to the generic message
    }
    return `HTTP ${response.status}`;
}

function raiseFor(status: number, message: string): never {
    if (status === 401) throw new UnauthorizedError(message);
    if (status === 409) throw new ConflictError(message);
    throw new ApiError(message, status);
}

export class AnnotationClient {
    private readonly fetchImpl: FetchLike;

    constructor(readonly baseUrl: string, fetchImpl?: FetchLike) {
        this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
    }

    private url(path: string): string {
        return this.baseUrl.replace(/\/+$/, "") + path;
    }

    private async request(path: string, init?: RequestInit): Promise<Response> {
        let response: Response;
        try {
            response = await this.fetchImpl(this.url(path), init);
        } catch (err) {
            throw new NetworkError(err instanceof Error ? err.message : String(err));
        }
        if (!response.ok) {
            raiseFor(response.status, await errorMessage(response));
        }
        return response;
    }

    /** Next task for the evaluator, or null when the queue is drained. */
    async fetchTask(evaluatorId: string): Promise<Task | null> {
        const response = await this.request(
            `/task?evaluator=${encodeURIComponent(evaluatorId)}`,
        );
        const body = (await response.json()) as { task: Task | null };
        return body.task;
    }

    /**
     * Submit one rating. Scores are re-validated here so no payload with a
     * value outside {1,2,3} can ever leave the client.
     */
    async submitRating(submission: RatingSubmission): Promise<StoredRating> {
        if (!isScore(submission.accuracy) || !isScore(submission.fluency)) {
            throw new RangeError(
                `scores must be 1, 2, or 3; got accuracy=${submission.accuracy} fluency=${submission.fluency}`,
            );
        }
        const response = await this.request("/rating", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(submission),
        });
        return (await response.json()) as StoredRating;
    }

    async fetchExport(): Promise<StoredRating[]> {
        const response = await this.request("/export");
        return (await response.json()) as StoredRating[];
    }

    async fetchAgreement(): Promise<AgreementReport> {
        const response = await this.request("/agreement");
        return (await response.json()) as AgreementReport;
    }
}
