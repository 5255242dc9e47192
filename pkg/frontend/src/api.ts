// Typed client for the listening-test HTTP API.
//
// The server never sends anything that reveals which option is the original;
// this module likewise never sends anything beyond the participant's choice
// and playback counts.

export interface SessionInfo {
    session_id: string;
    participant_id: string;
    total_questions: number;
    created_utc: string;
}

export interface TrialPayload {
    done: boolean;
    question_index?: number;
    total_questions?: number;
    reference_url?: string;
    a_url?: string;
    b_url?: string;
    post_questionnaire_url?: string;
    answered?: number;
}

export interface SessionSummary {
    session_id: string;
    participant_id: string;
    answered: number;
    total_questions: number;
    done: boolean;
}

export interface PlaybackCounts {
    reference: number;
    a: number;
    b: number;
}

export interface ResponseBody {
    question_index: number;
    response: "A" | "B";
    playback_counts: PlaybackCounts;
}

export interface SubmitResult {
    recorded: boolean;
    question_index: number;
    done: boolean;
}

export class ApiError extends Error {
    constructor(readonly status: number, message: string) {
        super(message);
        this.name = "ApiError";
    }
}

export interface ExperimentApi {
    createSession(participantId: string): Promise<SessionInfo>;
    nextTrial(sessionId: string): Promise<TrialPayload>;
    submitResponse(sessionId: string, body: ResponseBody): Promise<SubmitResult>;
    sessionSummary(sessionId: string): Promise<SessionSummary>;
}

async function requestJson<T>(url: string, init?: RequestInit): Promise<T> {
    const response = await fetch(url, init);
    if (!response.ok) {
        let detail = response.statusText;
        try {
            const body = await response.json();
            detail = body.error ?? body.detail ?? detail;
        } catch {
            // non-JSON error body; keep the status text
        }
        throw new ApiError(response.status, String(detail));
    }
    return (await response.json()) as T;
}

export class HttpExperimentApi implements ExperimentApi {
    constructor(private readonly baseUrl: string = "") {}

    createSession(participantId: string): Promise<SessionInfo> {
        return requestJson<SessionInfo>(`${this.baseUrl}/api/sessions`, {
            method: "POST",
            headers: {"Content-Type": "application/json"},
            body: JSON.stringify({participant_id: participantId}),
        });
    }

    nextTrial(sessionId: string): Promise<TrialPayload> {
        return requestJson<TrialPayload>(
            `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/trial`,
        );
    }

    submitResponse(sessionId: string, body: ResponseBody): Promise<SubmitResult> {
        return requestJson<SubmitResult>(
            `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/responses`,
            {
                method: "POST",
                headers: {"Content-Type": "application/json"},
                body: JSON.stringify(body),
            },
        );
    }

    sessionSummary(sessionId: string): Promise<SessionSummary> {
        return requestJson<SessionSummary>(
            `${this.baseUrl}/api/sessions/${encodeURIComponent(sessionId)}/summary`,
        );
    }
}
