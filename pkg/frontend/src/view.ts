/** DOM rendering: sentence triplet, rubric panels, score buttons, shortcuts. */

import { ACCURACY_RUBRIC, FLUENCY_RUBRIC, GENERAL_GUIDELINES, RubricLevel } from "./rubric";
import { AnnotationSession, Dimension, SessionSnapshot } from "./session";
import { SCORES } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function rubricPanel(title: string, levels: readonly RubricLevel[]): HTMLElement {
    const details = el("details", "rubric-panel");
    details.open = false;
    const summary = el("summary", undefined, `${title} rubric`);
    details.appendChild(summary);
    for (const level of levels) {
        details.appendChild(el("h4", undefined, `${level.score}. ${level.title}`));
        const list = el("ul");
        for (const point of level.points) list.appendChild(el("li", undefined, point));
        details.appendChild(list);
    }
    return details;
}

function sentencePanel(label: string, text: string, cssClass: string): HTMLElement {
    const panel = el("section", `sentence-panel ${cssClass}`);
    panel.appendChild(el("h3", "sentence-label", label));
    const body = el("p", "sentence-text");
    body.textContent = text; // textContent: the exact triplet, no truncation
    panel.appendChild(body);
    return panel;
}

function scoreRow(
    session: AnnotationSession,
    dimension: Dimension,
    selected: number | null,
): HTMLElement {
    const row = el("div", "score-row");
    row.dataset.dimension = dimension;
    row.appendChild(el("span", "score-title", dimension === "accuracy" ? "Accuracy" : "Fluency"));
    for (const score of SCORES) {
        const button = el("button", "score-button", String(score));
        button.type = "button";
        button.dataset.score = String(score);
        if (selected === score) button.classList.add("selected");
        button.addEventListener("click", () => session.selectScore(dimension, score));
        row.appendChild(button);
    }
    return row;
}

export function render(root: HTMLElement, session: AnnotationSession): void {
    const snapshot = session.snapshot();
    root.textContent = "";
    root.appendChild(el("h1", "app-title", "Code-switching annotation"));

    if (snapshot.state === "loading" || snapshot.state === "idle") {
        root.appendChild(el("p", "status", "Loading next sentence…"));
        return;
    }
    if (snapshot.state === "login-required") {
        const banner = el("div", "banner banner-error");
        banner.appendChild(el("p", undefined, "This evaluator id is not registered."));
        banner.appendChild(el("p", undefined, "Check the evaluator parameter and reload."));
        root.appendChild(banner);
        return;
    }
    if (snapshot.state === "queue-empty") {
        root.appendChild(el("p", "status", "Queue empty: no sentences left to rate. Thank you!"));
        return;
    }
    if (snapshot.state === "offline" || snapshot.state === "error") {
        const banner = el("div", "banner banner-retry");
        banner.appendChild(
            el("p", undefined, snapshot.message || "Connection problem; your work is kept locally."),
        );
        const retry = el("button", "retry-button", "Retry");
        retry.type = "button";
        retry.addEventListener("click", () => {
            void session.retryPending().then(() => {
                if (session.snapshot().state === "offline") return;
                if (session.snapshot().task === null) void session.start();
            });
        });
        banner.appendChild(retry);
        root.appendChild(banner);
        if (snapshot.pendingCount > 0) {
            root.appendChild(
                el("p", "status", `${snapshot.pendingCount} rating(s) queued for resend.`),
            );
        }
        return;
    }

    const task = snapshot.task;
    if (!task) return;

    const triplet = el("div", "triplet");
    triplet.appendChild(sentencePanel("English sentence", task.text_l1, "panel-l1"));
    triplet.appendChild(sentencePanel("Native-language sentence", task.text_l2, "panel-l2"));
    triplet.appendChild(sentencePanel("Generated code-switched sentence", task.text_cs, "panel-cs"));
    root.appendChild(triplet);

    const guidelines = el("details", "rubric-panel");
    guidelines.appendChild(el("summary", undefined, "General guidelines"));
    const list = el("ul");
    for (const line of GENERAL_GUIDELINES) list.appendChild(el("li", undefined, line));
    guidelines.appendChild(list);
    root.appendChild(guidelines);
    root.appendChild(rubricPanel("Accuracy", ACCURACY_RUBRIC));
    root.appendChild(rubricPanel("Fluency", FLUENCY_RUBRIC));

    root.appendChild(scoreRow(session, "accuracy", snapshot.accuracy));
    root.appendChild(scoreRow(session, "fluency", snapshot.fluency));

    const submit = el("button", "submit-button", "Submit and next");
    submit.type = "button";
    submit.disabled = !session.canSubmit();
    submit.addEventListener("click", () => void session.submitAndAdvance());
    root.appendChild(submit);

    root.appendChild(
        el(
            "p",
            "hint",
            "Keys 1-3 set Accuracy, then Fluency; R clears; Enter submits.",
        ),
    );
    root.appendChild(
        el("p", "progress", `${snapshot.submittedCount} rating(s) submitted this session.`),
    );
}

/** Global keyboard shortcuts: digits score, R resets, Enter submits. */
export function bindKeyboard(session: AnnotationSession, target: Document): void {
    target.addEventListener("keydown", (event: KeyboardEvent) => {
        if (event.key >= "1" && event.key <= "3") {
            session.pressDigit(Number(event.key));
        } else if (event.key === "r" || event.key === "R") {
            session.clearScores();
        } else if (event.key === "Enter" && session.canSubmit()) {
            void session.submitAndAdvance();
        }
    });
}
