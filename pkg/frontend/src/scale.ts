/** Axis scales and tick generation (pure, deterministic). */

export interface Scale {
  /** data value -> pixel coordinate */
  map(v: number): number;
  ticks(): number[];
  domain: [number, number];
}

export function linearScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (!(hi > lo)) hi = lo + 1;
  const k = (pxHi - pxLo) / (hi - lo);
  return {
    domain: [lo, hi],
    map: (v) => pxLo + (v - lo) * k,
    ticks: () => niceTicks(lo, hi, 6),
  };
}

export function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (!(lo > 0)) throw new Error("log scale needs positive domain");
  if (!(hi > lo)) hi = lo * 10;
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const k = (pxHi - pxLo) / (lhi - llo);
  return {
    domain: [lo, hi],
    map: (v) => pxLo + (Math.log10(v) - llo) * k,
    ticks: () => decadeTicks(lo, hi),
  };
}

export function niceTicks(lo: number, hi: number, n: number): number[] {
  const span = hi - lo;
  const step0 = span / Math.max(1, n);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const norm = step0 / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function decadeTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  const e0 = Math.ceil(Math.log10(lo) - 1e-12);
  const e1 = Math.floor(Math.log10(hi) + 1e-12);
  for (let e = e0; e <= e1; e++) out.push(Math.pow(10, e));
  if (out.length === 0) out.push(lo, hi);
  // thin to at most 10 labeled decades
  const stride = Math.max(1, Math.ceil(out.length / 10));
  return out.filter((_, i) => i % stride === 0);
}

export function tickLabel(v: number, log: boolean): string {
  if (log) {
    const e = Math.round(Math.log10(v));
    return `1e${e}`;
  }
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(0);
  return parseFloat(v.toPrecision(6)).toString();
}
