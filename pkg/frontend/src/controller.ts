// Session state machine for the forced-choice trial flow.
//
// Phases: loading -> notice -> trial -> submitting -> (trial | done),
// with an explicit error phase offering a resync.  No transition skips
// `submitting`, and a submission is only possible with a selection made
// (forced choice: there is no skip).

import {
    ApiError,
    ExperimentApi,
    PlaybackCounts,
    ResponseBody,
    TrialPayload,
} from "./api.js";

export type Phase = "idle" | "loading" | "notice" | "trial" | "submitting" | "done" | "error";

export type Choice = "A" | "B";

export interface TrialView {
    questionIndex: number;
    totalQuestions: number;
    referenceUrl: string;
    aUrl: string;
    bUrl: string;
    selection: Choice | null;
}

export interface ControllerState {
    phase: Phase;
    sessionId: string | null;
    participantId: string | null;
    trial: TrialView | null;
    playbackCounts: PlaybackCounts;
    answered: number;
    totalQuestions: number;
    postQuestionnaireUrl: string | null;
    errorMessage: string | null;
}

const SUBMIT_RETRIES = 3;
const RETRY_DELAY_MS = 600;

function freshCounts(): PlaybackCounts {
    return {reference: 0, a: 0, b: 0};
}

function sleep(ms: number): Promise<void> {
    return new Promise((resolve) => setTimeout(resolve, ms));
}

export class SessionController {
    private state: ControllerState = {
        phase: "idle",
        sessionId: null,
        participantId: null,
        trial: null,
        playbackCounts: freshCounts(),
        answered: 0,
        totalQuestions: 0,
        postQuestionnaireUrl: null,
        errorMessage: null,
    };

    constructor(
        private readonly api: ExperimentApi,
        private readonly onChange: (state: ControllerState) => void = () => {},
        private readonly retryDelayMs: number = RETRY_DELAY_MS,
    ) {}

    getState(): ControllerState {
        return this.state;
    }

    private update(partial: Partial<ControllerState>): void {
        this.state = {...this.state, ...partial};
        this.onChange(this.state);
    }

    /** Create a session (or resume one by id) and land on notice/trial/done. */
    async start(participantId: string, existingSessionId?: string): Promise<void> {
        this.update({phase: "loading", participantId, errorMessage: null});
        try {
            let sessionId = existingSessionId ?? null;
            if (sessionId) {
                // probe the session; an unknown id falls back to a new session
                try {
                    await this.api.sessionSummary(sessionId);
                } catch (err) {
                    if (err instanceof ApiError && err.status === 404) {
                        sessionId = null;
                    } else {
                        throw err;
                    }
                }
            }
            if (!sessionId) {
                const info = await this.api.createSession(participantId);
                sessionId = info.session_id;
                this.update({totalQuestions: info.total_questions});
            }
            this.update({sessionId});
            const trial = await this.api.nextTrial(sessionId);
            if (!trial.done && trial.question_index === 1) {
                // headphone notice shown once, before the very first trial
                this.applyTrial(trial, "notice");
            } else {
                this.applyTrial(trial, "trial");
            }
        } catch (err) {
            this.fail(err);
        }
    }

    /** Leave the headphone notice and show the first trial. */
    acknowledgeNotice(): void {
        if (this.state.phase !== "notice") return;
        this.update({phase: "trial"});
    }

    select(choice: Choice): void {
        if (this.state.phase !== "trial" || !this.state.trial) return;
        this.update({trial: {...this.state.trial, selection: choice}});
    }

    recordPlayback(role: keyof PlaybackCounts): void {
        const counts = {...this.state.playbackCounts};
        counts[role] += 1;
        this.update({playbackCounts: counts});
    }

    canSubmit(): boolean {
        return this.state.phase === "trial" && this.state.trial?.selection != null;
    }

    /**
     * Submit the forced choice.  Double activation is a no-op: the phase
     * flips to `submitting` synchronously.  A network failure keeps the
     * response and retries it; a conflict after a retry means the first
     * attempt actually landed, so the flow just advances.
     */
    async submit(): Promise<void> {
        if (!this.canSubmit() || !this.state.trial || !this.state.sessionId) return;
        const trial = this.state.trial;
        const body: ResponseBody = {
            question_index: trial.questionIndex,
            response: trial.selection as Choice,
            playback_counts: this.state.playbackCounts,
        };
        this.update({phase: "submitting"});

        let delivered = false;
        let lastError: unknown = null;
        for (let attempt = 0; attempt < SUBMIT_RETRIES && !delivered; attempt++) {
            try {
                await this.api.submitResponse(this.state.sessionId, body);
                delivered = true;
            } catch (err) {
                lastError = err;
                if (err instanceof ApiError) {
                    if (err.status === 409 && attempt > 0) {
                        // the lost acknowledgment case: the server has it
                        delivered = true;
                        break;
                    }
                    // sequencing/conflict from a stale view: surface a resync
                    this.fail(err);
                    return;
                }
                // network-level failure: retain the response and retry
                await sleep(this.retryDelayMs);
            }
        }
        if (!delivered) {
            this.fail(lastError);
            return;
        }

        this.update({answered: this.state.answered + 1});
        await this.advance();
    }

    /** Fetch the current trial after an error or a submission. */
    async resync(): Promise<void> {
        if (!this.state.sessionId) return;
        this.update({phase: "loading", errorMessage: null});
        await this.advance();
    }

    private async advance(): Promise<void> {
        try {
            const trial = await this.api.nextTrial(this.state.sessionId as string);
            this.applyTrial(trial, "trial");
        } catch (err) {
            this.fail(err);
        }
    }

    private applyTrial(payload: TrialPayload, phase: "trial" | "notice"): void {
        if (payload.done) {
            this.update({
                phase: "done",
                trial: null,
                answered: payload.answered ?? this.state.answered,
                totalQuestions: payload.total_questions ?? this.state.totalQuestions,
                postQuestionnaireUrl: payload.post_questionnaire_url ?? null,
            });
            return;
        }
        this.update({
            phase,
            trial: {
                questionIndex: payload.question_index as number,
                totalQuestions: payload.total_questions as number,
                referenceUrl: payload.reference_url as string,
                aUrl: payload.a_url as string,
                bUrl: payload.b_url as string,
                selection: null,
            },
            totalQuestions: payload.total_questions as number,
            answered: (payload.question_index as number) - 1,
            playbackCounts: freshCounts(),
        });
    }

    private fail(err: unknown): void {
        const message =
            err instanceof ApiError
                ? `${err.message} (HTTP ${err.status})`
                : err instanceof Error
                    ? err.message
                    : String(err);
        this.update({phase: "error", errorMessage: message});
    }
}
