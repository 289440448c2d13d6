// Display-text markup: the service renders each grammar slot as
// "(option/option/...)" inside plain prose. The client splits that into
// segments so option groups can be styled and, after scoring, marked
// credited or uncredited.

import type { SlotFeedback } from './api'

export interface TextSegment {
  kind: 'text'
  text: string
}

export interface OptionGroupSegment {
  kind: 'options'
  slotIndex: number
  options: string[]
}

export type DisplaySegment = TextSegment | OptionGroupSegment

const GROUP_PATTERN = /\(([^()]*\/[^()]*)\)/g

export function parseDisplayText(displayText: string): DisplaySegment[] {
  const segments: DisplaySegment[] = []
  let slotIndex = 0
  let cursor = 0
  for (const match of displayText.matchAll(GROUP_PATTERN)) {
    const start = match.index ?? 0
    if (start > cursor) {
      segments.push({ kind: 'text', text: displayText.slice(cursor, start) })
    }
    segments.push({
      kind: 'options',
      slotIndex: slotIndex++,
      options: match[1].split('/').map((o) => o.trim()),
    })
    cursor = start + match[0].length
  }
  if (cursor < displayText.length) {
    segments.push({ kind: 'text', text: displayText.slice(cursor) })
  }
  return segments
}

export function optionGroups(segments: DisplaySegment[]): OptionGroupSegment[] {
  return segments.filter((s): s is OptionGroupSegment => s.kind === 'options')
}

export interface SlotView {
  index: number
  options: string[]
  credited: boolean
  correct: string
  observed: string[]
}

export interface FeedbackView {
  score: number
  outOf: number
  epsilon?: number
  slots: SlotView[]
}

/** Join the displayed option groups with the per-slot scoring verdicts. */
export function buildFeedback(
  segments: DisplaySegment[],
  report: { score: number; slots: SlotFeedback[]; epsilon_g?: number },
): FeedbackView {
  const groups = optionGroups(segments)
  const byIndex = new Map(report.slots.map((s) => [s.index, s]))
  const slots: SlotView[] = groups.map((group) => {
    const verdict = byIndex.get(group.slotIndex)
    if (!verdict) {
      throw new Error(`report is missing slot ${group.slotIndex}`)
    }
    return {
      index: group.slotIndex,
      options: group.options,
      credited: verdict.credited,
      correct: verdict.correct,
      observed: verdict.observed,
    }
  })
  return {
    score: report.score,
    outOf: groups.length,
    epsilon: report.epsilon_g,
    slots,
  }
}
