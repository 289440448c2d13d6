// Typed client for the assessment service. Every request/response body is
// recorded so tests can assert that no correct answers travel before the
// feedback phase.

export interface CreateAssessmentRequest {
  mode: 'supplied' | 'offline' | 'llm'
  paragraph_text?: string
  subject?: string
  seed?: number
}

export interface DisplayPayload {
  id: string
  status: string
  display_text: string
  slot_count: number
}

export interface SlotFeedback {
  index: number
  correct: string
  credited: boolean
  observed: string[]
}

export interface GrammarReportPayload {
  score: number
  slots: SlotFeedback[]
  epsilon_g?: number
  gold_score?: number
}

export interface ScoredPayload {
  id: string
  status: string
  report: GrammarReportPayload
}

export interface TrafficRecord {
  method: string
  path: string
  requestBody: string
  responseBody: string
  status: number
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: string) {
    super(`service returned ${status}: ${body}`)
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

export class AssessmentApi {
  readonly traffic: TrafficRecord[] = []

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const requestBody = body === undefined ? '' : JSON.stringify(body)
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: requestBody ? { 'Content-Type': 'application/json' } : undefined,
      body: requestBody || undefined,
    })
    const responseBody = await response.text()
    this.traffic.push({ method, path, requestBody, responseBody, status: response.status })
    if (!response.ok) throw new ApiError(response.status, responseBody)
    return JSON.parse(responseBody) as T
  }

  createAssessment(request: CreateAssessmentRequest): Promise<DisplayPayload> {
    return this.call<DisplayPayload>('POST', '/assessments', request)
  }

  getDisplay(sessionId: string): Promise<DisplayPayload> {
    return this.call<DisplayPayload>('GET', `/assessments/${sessionId}/display`)
  }

  submitTranscript(sessionId: string, text: string): Promise<ScoredPayload> {
    return this.call<ScoredPayload>('POST', `/assessments/${sessionId}/submission`, {
      kind: 'transcript',
      text,
    })
  }

  getReport(sessionId: string): Promise<ScoredPayload> {
    return this.call<ScoredPayload>('GET', `/assessments/${sessionId}/report`)
  }

  /** Traffic captured before the given record count, as one string. */
  trafficBefore(count: number): string {
    return this.traffic
      .slice(0, count)
      .map((t) => t.requestBody + '\n' + t.responseBody)
      .join('\n')
  }
}
