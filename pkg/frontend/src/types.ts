/** Shared wire types for the annotation service API. */

export type Score = 1 | 2 | 3;

export const SCORES: readonly Score[] = [1, 2, 3];

export function isScore(value: unknown): value is Score {
    return value === 1 || value === 2 || value === 3;
}

export interface Task {
    task_id: string;
    generation_id: string;
    text_l1: string;
    text_l2: string;
    text_cs: string;
    assigned_to: string;
    state: string;
    expires_at: number;
}

export interface RatingSubmission {
    task_id: string;
    evaluator_id: string;
    accuracy: Score;
    fluency: Score;
}

export interface StoredRating {
    generation_id: string;
    evaluator_id: string;
    accuracy: number;
    fluency: number;
    timestamp: string;
}

export interface AgreementReport {
    accuracy: { dimension: string; alpha: number };
    fluency: { dimension: string; alpha: number };
}
