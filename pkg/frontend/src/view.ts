// Framework-free DOM rendering: option groups as highlighted inline chips,
// feedback as credited/uncredited marks with the score.

import { DisplaySegment } from './markup'
import { FeedbackView } from './markup'

export function renderDisplay(container: HTMLElement, segments: DisplaySegment[]): void {
  container.textContent = ''
  for (const segment of segments) {
    if (segment.kind === 'text') {
      container.append(document.createTextNode(segment.text))
      continue
    }
    const group = document.createElement('span')
    group.className = 'option-group'
    group.dataset.slot = String(segment.slotIndex)
    group.textContent = `(${segment.options.join('/')})`
    container.append(group)
  }
}

export function renderFeedback(container: HTMLElement, feedback: FeedbackView): void {
  container.textContent = ''
  const headline = document.createElement('p')
  headline.className = 'score'
  headline.textContent = `Grammar score: ${feedback.score} / ${feedback.outOf}`
  container.append(headline)

  const list = document.createElement('ul')
  for (const slot of feedback.slots) {
    const item = document.createElement('li')
    item.className = slot.credited ? 'slot credited' : 'slot uncredited'
    item.dataset.slot = String(slot.index)
    const verdict = slot.credited
      ? `✓ ${slot.correct}`
      : `✗ expected "${slot.correct}", heard "${slot.observed.join(' ') || '(nothing)'}"`
    item.textContent = `(${slot.options.join('/')}) — ${verdict}`
    list.append(item)
  }
  container.append(list)
}

export function renderTimer(element: HTMLElement, secondsRemaining: number): void {
  const minutes = Math.floor(secondsRemaining / 60)
  const seconds = secondsRemaining % 60
  element.textContent = `${minutes}:${String(seconds).padStart(2, '0')}`
}
