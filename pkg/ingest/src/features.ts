// Deterministic embedders standing in for heavyweight pretrained extractors.
// Visual: per-frame 8x8 grid of block-averaged luma (64 dims, the "top pooled
// layer"). Audio: 24 Hann-windowed FFT steps reduced to 32 log band energies.
// Outputs are quantized to float32 so reruns agree bit for bit across
// platforms regardless of libm differences.

export const VISUAL_GRID = 8;
export const VISUAL_DIM = VISUAL_GRID * VISUAL_GRID;
export const AUDIO_STEPS = 24;
export const AUDIO_BANDS = 32;
export const FFT_SIZE = 256;

export const VISUAL_EXTRACTOR = `luma-block-mean-${VISUAL_GRID}x${VISUAL_GRID}/v1`;
export const AUDIO_EXTRACTOR = `logfft-hann${FFT_SIZE}-${AUDIO_BANDS}band/v1`;

/** 64-dim block-mean embedding of one luma plane; needs at least 8x8 pixels */
export function visualEmbedding(luma: Float64Array, width: number, height: number): number[] {
  if (width < VISUAL_GRID || height < VISUAL_GRID) {
    throw new Error(`frame ${width}x${height} smaller than ${VISUAL_GRID}x${VISUAL_GRID}`);
  }
  const out: number[] = [];
  for (let i = 0; i < VISUAL_GRID; i++) {
    const y0 = Math.floor((i * height) / VISUAL_GRID);
    const y1 = Math.floor(((i + 1) * height) / VISUAL_GRID);
    for (let j = 0; j < VISUAL_GRID; j++) {
      const x0 = Math.floor((j * width) / VISUAL_GRID);
      const x1 = Math.floor(((j + 1) * width) / VISUAL_GRID);
      let sum = 0;
      for (let y = y0; y < y1; y++) {
        for (let x = x0; x < x1; x++) sum += luma[y * width + x];
      }
      out.push(Math.fround(sum / ((y1 - y0) * (x1 - x0))));
    }
  }
  return out;
}

/** in-place iterative radix-2 FFT; length must be a power of two */
export function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if (n !== im.length || (n & (n - 1)) !== 0) throw new Error('fft length must be a power of two');
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = (-2 * Math.PI) / len;
    const wr = Math.cos(ang);
    const wi = Math.sin(ang);
    for (let i = 0; i < n; i += len) {
      let cr = 1;
      let ci = 0;
      for (let k = 0; k < len / 2; k++) {
        const ur = re[i + k];
        const ui = im[i + k];
        const vr = re[i + k + len / 2] * cr - im[i + k + len / 2] * ci;
        const vi = re[i + k + len / 2] * ci + im[i + k + len / 2] * cr;
        re[i + k] = ur + vr;
        im[i + k] = ui + vi;
        re[i + k + len / 2] = ur - vr;
        im[i + k + len / 2] = ui - vi;
        const nr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = nr;
      }
    }
  }
}

/** 24x32 matrix of log band energies covering the whole clip */
export function audioEmbedding(samples: Float64Array): number[][] {
  const w = FFT_SIZE;
  const hann = new Float64Array(w);
  for (let i = 0; i < w; i++) hann[i] = 0.5 * (1 - Math.cos((2 * Math.PI * i) / (w - 1)));
  const binsPerBand = w / 2 / AUDIO_BANDS;

  const steps: number[][] = [];
  for (let k = 0; k < AUDIO_STEPS; k++) {
    const start =
      samples.length <= w ? 0 : Math.floor((k * (samples.length - w)) / (AUDIO_STEPS - 1));
    const re = new Float64Array(w);
    const im = new Float64Array(w);
    for (let i = 0; i < w; i++) {
      re[i] = (start + i < samples.length ? samples[start + i] : 0) * hann[i];
    }
    fft(re, im);
    const bands: number[] = [];
    for (let b = 0; b < AUDIO_BANDS; b++) {
      let energy = 0;
      for (let j = b * binsPerBand; j < (b + 1) * binsPerBand; j++) {
        energy += re[j] * re[j] + im[j] * im[j];
      }
      bands.push(Math.fround(Math.log(1e-8 + energy)));
    }
    steps.push(bands);
  }
  return steps;
}
