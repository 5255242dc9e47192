// DOM wiring: renders the controller state into #app and forwards events.

import {HttpExperimentApi} from "./api.js";
import {Choice, ControllerState, SessionController} from "./controller.js";

const SESSION_KEY = "phasekit.session_id";
const PARTICIPANT_KEY = "phasekit.participant_id";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text) node.textContent = text;
    return node;
}

function player(
    label: string, url: string, role: "reference" | "a" | "b",
    controller: SessionController,
): HTMLElement {
    const wrap = el("div", "player");
    wrap.appendChild(el("h3", undefined, label));
    const audio = el("audio");
    audio.controls = true;
    audio.preload = "auto";
    audio.src = url;
    audio.addEventListener("play", () => controller.recordPlayback(role));
    const retry = el("button", "retry hidden", "Reload audio");
    retry.addEventListener("click", () => {
        retry.classList.add("hidden");
        audio.load();
    });
    audio.addEventListener("error", () => retry.classList.remove("hidden"));
    wrap.appendChild(audio);
    wrap.appendChild(retry);
    return wrap;
}

function render(state: ControllerState, controller: SessionController, root: HTMLElement): void {
    root.replaceChildren();

    if (state.phase === "loading" || state.phase === "idle") {
        root.appendChild(el("p", "status", "Loading…"));
        return;
    }

    if (state.phase === "error") {
        root.appendChild(el("p", "status error", state.errorMessage ?? "Something went wrong."));
        const reload = el("button", "primary", "Reload session");
        reload.addEventListener("click", () => void controller.resync());
        root.appendChild(reload);
        return;
    }

    if (state.phase === "notice") {
        const notice = el("div", "notice");
        notice.appendChild(el("h2", undefined, "Before you begin"));
        notice.appendChild(el("p", undefined,
            "Please use high-quality headphones or studio monitors in a quiet room. " +
            "You can replay each clip as often as you like."));
        const begin = el("button", "primary", "Begin");
        begin.addEventListener("click", () => controller.acknowledgeNotice());
        notice.appendChild(begin);
        root.appendChild(notice);
        return;
    }

    if (state.phase === "done") {
        const done = el("div", "done");
        done.appendChild(el("h2", undefined, "All done — thank you!"));
        done.appendChild(el("p", undefined,
            `You answered ${state.answered} of ${state.totalQuestions} questions.`));
        if (state.postQuestionnaireUrl) {
            const link = el("a", "primary");
            link.textContent = "Continue to the short final questionnaire";
            (link as HTMLAnchorElement).href = state.postQuestionnaireUrl;
            done.appendChild(link);
        }
        window.localStorage.removeItem(SESSION_KEY);
        root.appendChild(done);
        return;
    }

    // trial / submitting
    const trial = state.trial;
    if (!trial) return;
    const page = el("div", "trial");
    page.appendChild(el("p", "progress",
        `Question ${trial.questionIndex} of ${trial.totalQuestions}`));
    page.appendChild(el("p", "prompt",
        "Listen to the reference, then choose which option sounds identical to it."));
    page.appendChild(player("Reference", trial.referenceUrl, "reference", controller));

    const options = el("div", "options");
    for (const choice of ["A", "B"] as Choice[]) {
        const box = el("div", "option" + (trial.selection === choice ? " selected" : ""));
        box.appendChild(player(`Option ${choice}`,
            choice === "A" ? trial.aUrl : trial.bUrl,
            choice === "A" ? "a" : "b", controller));
        const pick = el("button", "pick",
            trial.selection === choice ? `Selected ${choice}` : `Choose ${choice}`);
        pick.addEventListener("click", () => controller.select(choice));
        box.appendChild(pick);
        options.appendChild(box);
    }
    page.appendChild(options);

    const submit = el("button", "primary submit",
        state.phase === "submitting" ? "Submitting…" : "Submit answer");
    submit.disabled = !controller.canSubmit();
    submit.addEventListener("click", () => void controller.submit());
    page.appendChild(submit);
    root.appendChild(page);
}

function participantId(): string {
    const fromQuery = new URLSearchParams(window.location.search).get("participant");
    if (fromQuery) {
        window.localStorage.setItem(PARTICIPANT_KEY, fromQuery);
        return fromQuery;
    }
    const stored = window.localStorage.getItem(PARTICIPANT_KEY);
    if (stored) return stored;
    const entered = window.prompt("Enter your participant id:") || `anon-${Date.now()}`;
    window.localStorage.setItem(PARTICIPANT_KEY, entered);
    return entered;
}

function boot(): void {
    const root = document.getElementById("app");
    if (!root) throw new Error("missing #app container");
    const controller: SessionController = new SessionController(
        new HttpExperimentApi(),
        (state) => {
            if (state.sessionId) window.localStorage.setItem(SESSION_KEY, state.sessionId);
            render(state, controller, root);
        },
    );
    const existing = window.localStorage.getItem(SESSION_KEY) ?? undefined;
    void controller.start(participantId(), existing);
}

document.addEventListener("DOMContentLoaded", boot);
