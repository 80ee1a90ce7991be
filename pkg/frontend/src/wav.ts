/**
 * Minimal WAV reader for track previews: float32 and PCM16 payloads.
 *
 * The preview needs per-pixel min/max peaks, decimated client-side from the
 * downloaded track bytes; no server support involved.
 */

export interface DecodedWav {
  sampleRate: number;
  channels: number;
  frames: number;
  /** first-channel samples, range [-1, 1] */
  samples: Float32Array;
}

export interface PeakPair {
  min: number;
  max: number;
}

export function decodeWav(buffer: ArrayBuffer): DecodedWav {
  const view = new DataView(buffer);
  const ascii = (offset: number) =>
    String.fromCharCode(view.getUint8(offset), view.getUint8(offset + 1), view.getUint8(offset + 2), view.getUint8(offset + 3));
  if (buffer.byteLength < 12 || ascii(0) !== "RIFF" || ascii(8) !== "WAVE") {
    throw new Error("not a RIFF/WAVE file");
  }

  let format = 0;
  let channels = 0;
  let sampleRate = 0;
  let bits = 0;
  let dataOffset = -1;
  let dataSize = 0;

  let pos = 12;
  while (pos + 8 <= buffer.byteLength) {
    const id = ascii(pos);
    const size = view.getUint32(pos + 4, true);
    const body = pos + 8;
    if (id === "fmt ") {
      format = view.getUint16(body, true);
      channels = view.getUint16(body + 2, true);
      sampleRate = view.getUint32(body + 4, true);
      bits = view.getUint16(body + 14, true);
      if (format === 0xfffe && size >= 40) {
        format = view.getUint16(body + 24, true); // SubFormat GUID head
      }
    } else if (id === "data") {
      dataOffset = body;
      dataSize = Math.min(size, buffer.byteLength - body);
    }
    pos = body + size + (size % 2);
  }
  if (dataOffset < 0 || channels < 1) throw new Error("missing fmt or data chunk");

  const bytesPerSample = bits / 8;
  const frames = Math.floor(dataSize / (bytesPerSample * channels));
  const samples = new Float32Array(frames);
  if (format === 3 && bits === 32) {
    for (let i = 0; i < frames; i++) {
      samples[i] = view.getFloat32(dataOffset + i * channels * 4, true);
    }
  } else if (format === 1 && bits === 16) {
    for (let i = 0; i < frames; i++) {
      samples[i] = view.getInt16(dataOffset + i * channels * 2, true) / 32768;
    }
  } else {
    throw new Error(`unsupported WAV format ${format}/${bits}-bit`);
  }
  return { sampleRate, channels, frames, samples };
}

/** Decimate samples to one min/max pair per pixel column. */
export function peaks(samples: Float32Array, columns: number): PeakPair[] {
  const out: PeakPair[] = [];
  if (samples.length === 0 || columns <= 0) return out;
  const perColumn = samples.length / columns;
  for (let c = 0; c < columns; c++) {
    const start = Math.floor(c * perColumn);
    const end = Math.max(start + 1, Math.floor((c + 1) * perColumn));
    let min = samples[start];
    let max = samples[start];
    for (let i = start + 1; i < end && i < samples.length; i++) {
      if (samples[i] < min) min = samples[i];
      if (samples[i] > max) max = samples[i];
    }
    out.push({ min, max });
  }
  return out;
}

/** Draw a peak outline onto a canvas; quietly does nothing without a 2D context. */
export function drawWaveform(canvas: HTMLCanvasElement, pairs: PeakPair[]): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#4a90d9";
  const mid = height / 2;
  for (let x = 0; x < Math.min(width, pairs.length); x++) {
    const top = mid - pairs[x].max * mid;
    const bottom = mid - pairs[x].min * mid;
    ctx.fillRect(x, top, 1, Math.max(1, bottom - top));
  }
}
