// Browser wiring: one assessment session per page.

import { AssessmentApi } from './api'
import { ReadingRecorder, downloadName } from './recorder'
import { AssessmentFlow } from './session'
import { renderDisplay, renderFeedback, renderTimer } from './view'

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing #${id}`)
  return node as T
}

export function bootstrap(baseUrl: string = ''): void {
  const api = new AssessmentApi(baseUrl)
  const flow = new AssessmentFlow(api)
  const recorder = new ReadingRecorder()

  const paragraphEl = el<HTMLElement>('paragraph')
  const timerEl = el<HTMLElement>('timer')
  const statusEl = el<HTMLElement>('status')
  const feedbackEl = el<HTMLElement>('feedback')
  const transcriptEl = el<HTMLTextAreaElement>('transcript')
  const errorEl = el<HTMLElement>('error')

  let timerHandle: number | undefined

  function showPhase(): void {
    statusEl.textContent = flow.phase
    renderTimer(timerEl, flow.secondsRemaining)
    el<HTMLButtonElement>('submit').disabled =
      flow.phase === 'submitting' || flow.phase === 'feedback'
  }

  el<HTMLButtonElement>('start').addEventListener('click', async () => {
    errorEl.textContent = ''
    try {
      await flow.start({ mode: 'offline' })
    } catch (error) {
      errorEl.textContent = error instanceof Error ? error.message : String(error)
      return
    }
    renderDisplay(paragraphEl, flow.segments)
    timerHandle = window.setInterval(() => {
      flow.tick()
      showPhase()
      if (flow.phase !== 'familiarize' && timerHandle !== undefined) {
        window.clearInterval(timerHandle)
      }
    }, 1000)
    showPhase()
  })

  el<HTMLButtonElement>('begin-reading').addEventListener('click', () => {
    flow.beginReading()
    showPhase()
  })

  el<HTMLButtonElement>('record').addEventListener('click', async () => {
    if (!recorder.isRecording) {
      await recorder.start()
      el<HTMLButtonElement>('record').textContent = 'Stop recording'
      return
    }
    const { audio, transcript } = await recorder.stopAndTranscribe()
    el<HTMLButtonElement>('record').textContent = 'Record reading'
    const link = el<HTMLAnchorElement>('download')
    link.href = URL.createObjectURL(audio)
    link.download = downloadName(flow.sessionId)
    link.hidden = false
    if (transcript) transcriptEl.value = transcript
  })

  el<HTMLButtonElement>('submit').addEventListener('click', async () => {
    errorEl.textContent = ''
    try {
      const feedback = await flow.submitTranscript(transcriptEl.value)
      renderFeedback(feedbackEl, feedback)
    } catch (error) {
      errorEl.textContent = error instanceof Error ? error.message : String(error)
    }
    showPhase()
  })
}
