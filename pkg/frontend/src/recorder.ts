// Microphone capture for the reading phase. The recording stays a local
// artifact (downloadable blob); no server-side speech recognition exists at
// desk scale, so a transcription hook lets deployments plug their own.

export type TranscribeHook = (audio: Blob) => Promise<string>

export class ReadingRecorder {
  private stream?: MediaStream
  private recorder?: MediaRecorder
  private chunks: BlobPart[] = []

  constructor(private readonly transcribe?: TranscribeHook) {}

  get isRecording(): boolean {
    return this.recorder?.state === 'recording'
  }

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true })
    this.recorder = new MediaRecorder(this.stream)
    this.chunks = []
    this.recorder.ondataavailable = (event) => this.chunks.push(event.data)
    this.recorder.start()
  }

  async stop(): Promise<Blob> {
    const recorder = this.recorder
    if (!recorder) throw new Error('not recording')
    await new Promise<void>((resolve) => {
      recorder.onstop = () => resolve()
      recorder.stop()
    })
    this.stream?.getTracks().forEach((track) => track.stop())
    return new Blob(this.chunks, { type: recorder.mimeType || 'audio/webm' })
  }

  /** Stop, keep the artifact, and ask the hook for a transcript (if any). */
  async stopAndTranscribe(): Promise<{ audio: Blob; transcript: string | null }> {
    const audio = await this.stop()
    if (!this.transcribe) return { audio, transcript: null }
    return { audio, transcript: await this.transcribe(audio) }
  }
}

export function downloadName(sessionId: string): string {
  return `reading-${sessionId}.webm`
}
