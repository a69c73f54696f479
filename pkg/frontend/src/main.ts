/** Entry point: wire the session to the DOM using query parameters. */

import { AnnotationClient } from "./api";
import { AnnotationSession } from "./session";
import { bindKeyboard, render } from "./view";

function param(name: string, fallback: string): string {
    const params = new URLSearchParams(window.location.search);
    return params.get(name) ?? fallback;
}

export function boot(root: HTMLElement): AnnotationSession {
    const server = param("server", "http://127.0.0.1:8787");
    const evaluator = param("evaluator", "");
    const client = new AnnotationClient(server);
    const session = new AnnotationSession(client, evaluator);
    session.onChange(() => render(root, session));
    bindKeyboard(session, document);
    window.addEventListener("online", () => void session.retryPending());
    void session.start();
    return session;
}

const rootElement = document.getElementById("app");
if (rootElement) {
    boot(rootElement);
}
