// Client-side assessment flow. Phases move strictly forward and mirror the
// server's session status; the familiarization timer only ever unlocks
// reading, it never submits on the student's behalf.

import { AssessmentApi, DisplayPayload, ScoredPayload } from './api'
import { buildFeedback, DisplaySegment, FeedbackView, parseDisplayText } from './markup'

export type Phase = 'familiarize' | 'reading' | 'submitting' | 'feedback'

export const DEFAULT_FAMILIARIZE_SECONDS = 60

export interface SessionOptions {
  familiarizeSeconds?: number
}

export class AssessmentFlow {
  phase: Phase = 'familiarize'
  sessionId = ''
  displayText = ''
  segments: DisplaySegment[] = []
  slotCount = 0
  secondsRemaining: number
  feedback: FeedbackView | null = null
  lastError: string | null = null

  constructor(
    private readonly api: AssessmentApi,
    options: SessionOptions = {},
  ) {
    this.secondsRemaining = options.familiarizeSeconds ?? DEFAULT_FAMILIARIZE_SECONDS
  }

  /** Create the assessment and enter the familiarization phase. */
  async start(request: Parameters<AssessmentApi['createAssessment']>[0]): Promise<void> {
    const display = await this.api.createAssessment(request)
    this.adoptDisplay(display)
    this.phase = 'familiarize'
  }

  private adoptDisplay(display: DisplayPayload): void {
    this.sessionId = display.id
    this.displayText = display.display_text
    this.segments = parseDisplayText(display.display_text)
    this.slotCount = display.slot_count
  }

  /** One second of familiarization time passing. Never submits. */
  tick(): void {
    if (this.phase !== 'familiarize') return
    this.secondsRemaining = Math.max(0, this.secondsRemaining - 1)
    if (this.secondsRemaining === 0) {
      this.phase = 'reading'
    }
  }

  /** The student chooses to start reading before the timer runs out. */
  beginReading(): void {
    if (this.phase === 'familiarize') {
      this.phase = 'reading'
    }
  }

  /** Explicit student action: submit a typed (or externally transcribed) reading. */
  async submitTranscript(text: string): Promise<FeedbackView> {
    if (this.phase !== 'reading' && this.phase !== 'familiarize') {
      throw new Error(`cannot submit while ${this.phase}`)
    }
    if (!text.trim()) {
      throw new Error('transcript is empty')
    }
    this.phase = 'submitting'
    let scored: ScoredPayload
    try {
      scored = await this.api.submitTranscript(this.sessionId, text)
    } catch (error) {
      // keep state so the student can retry after a network failure
      this.phase = 'reading'
      this.lastError = error instanceof Error ? error.message : String(error)
      throw error
    }
    this.feedback = buildFeedback(this.segments, scored.report)
    this.phase = 'feedback'
    this.lastError = null
    return this.feedback
  }
}
