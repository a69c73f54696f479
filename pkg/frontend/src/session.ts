/**
 * Annotation session state machine.
 *
 * One active task at a time; the submit button stays disabled until both
 * scores are chosen; a 409 means the server arbitrated against us, so the
 * current task is refreshed and the scores cleared; a network failure
 * queues the rating locally and resends it on the next retry.
 */

import { AnnotationClient, ConflictError, NetworkError, UnauthorizedError } from "./api";
import { RatingSubmission, Score, Task, isScore } from "./types";

export type SessionState =
    | "idle"
    | "loading"
    | "rating"
    | "queue-empty"
    | "login-required"
    | "offline"
    | "error";

export interface SessionSnapshot {
    state: SessionState;
    task: Task | null;
    accuracy: Score | null;
    fluency: Score | null;
    pendingCount: number;
    submittedCount: number;
    message: string;
}

export type Dimension = "accuracy" | "fluency";

type Listener = (snapshot: SessionSnapshot) => void;

export class AnnotationSession {
    private state: SessionState = "idle";
    private task: Task | null = null;
    private accuracy: Score | null = null;
    private fluency: Score | null = null;
    private message = "";
    private submittedCount = 0;
    private readonly pending: RatingSubmission[] = [];
    private readonly listeners: Listener[] = [];

    constructor(
        private readonly client: AnnotationClient,
        readonly evaluatorId: string,
    ) {}

    snapshot(): SessionSnapshot {
        return {
            state: this.state,
            task: this.task,
            accuracy: this.accuracy,
            fluency: this.fluency,
            pendingCount: this.pending.length,
            submittedCount: this.submittedCount,
            message: this.message,
        };
    }

    onChange(listener: Listener): void {
        this.listeners.push(listener);
    }

    private emit(): void {
        const snap = this.snapshot();
        for (const listener of this.listeners) listener(snap);
    }

    private setState(state: SessionState, message = ""): void {
        this.state = state;
        this.message = message;
        this.emit();
    }

    /** Select a score; anything outside {1,2,3} is rejected outright. */
    selectScore(dimension: Dimension, value: number): void {
        if (!isScore(value)) {
            throw new RangeError(`score must be 1, 2, or 3; got ${value}`);
        }
        if (this.state !== "rating") return;
        if (dimension === "accuracy") this.accuracy = value;
        else this.fluency = value;
        this.emit();
    }

    /** Digit shortcut: fills accuracy first, then fluency. */
    pressDigit(value: number): void {
        if (!isScore(value)) return;
        if (this.accuracy === null) this.selectScore("accuracy", value);
        else this.selectScore("fluency", value);
    }

    clearScores(): void {
        this.accuracy = null;
        this.fluency = null;
        this.emit();
    }

    canSubmit(): boolean {
        return this.state === "rating" && this.accuracy !== null && this.fluency !== null;
    }

    async start(): Promise<void> {
        await this.advance();
    }

    private async advance(): Promise<void> {
        this.setState("loading");
        this.accuracy = null;
        this.fluency = null;
        try {
            this.task = await this.client.fetchTask(this.evaluatorId);
        } catch (err) {
            this.task = null;
            if (err instanceof UnauthorizedError) {
                this.setState("login-required", err.message);
            } else if (err instanceof NetworkError) {
                this.setState("offline", err.message);
            } else {
                this.setState("error", err instanceof Error ? err.message : String(err));
            }
            return;
        }
        this.setState(this.task === null ? "queue-empty" : "rating");
    }

    /** Submit the current scores, then fetch the next task. */
    async submitAndAdvance(): Promise<void> {
        if (!this.canSubmit() || this.task === null) {
            throw new Error("both scores must be selected before submitting");
        }
        const submission: RatingSubmission = {
            task_id: this.task.task_id,
            evaluator_id: this.evaluatorId,
            accuracy: this.accuracy as Score,
            fluency: this.fluency as Score,
        };
        try {
            await this.client.submitRating(submission);
            this.submittedCount += 1;
        } catch (err) {
            if (err instanceof ConflictError) {
                // server already has a rating (double-submit or lost lease):
                // drop ours, refresh the task, start over with clear scores
                await this.advance();
                return;
            }
            if (err instanceof NetworkError) {
                this.pending.push(submission);
                this.setState("offline", "rating kept locally; retry when back online");
                return;
            }
            throw err;
        }
        await this.advance();
    }

    /** Resend queued ratings (e.g. on the browser 'online' event). */
    async retryPending(): Promise<void> {
        while (this.pending.length > 0) {
            const submission = this.pending[0]!;
            try {
                await this.client.submitRating(submission);
                this.submittedCount += 1;
            } catch (err) {
                if (err instanceof ConflictError) {
                    // the server already counted it; nothing left to resend
                } else if (err instanceof NetworkError) {
                    this.setState("offline", "still offline; rating kept locally");
                    return;
                } else {
                    throw err;
                }
            }
            this.pending.shift();
        }
        if (this.state === "offline") {
            await this.advance();
        }
    }
}
