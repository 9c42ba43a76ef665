/** Minimal deterministic SVG plotting: same inputs yield identical bytes. */

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

const PALETTE = [
  "#c0392b",
  "#2367a8",
  "#2a9d52",
  "#8e44ad",
  "#e67e22",
  "#16a085",
  "#7f8c8d",
  "#d4a017",
];

const FONT = `font-family="Helvetica, Arial, sans-serif"`;

function fmt(v: number): string {
  return v.toFixed(2);
}

function fmtTick(v: number): string {
  const a = Math.abs(v);
  if (v !== 0 && (a >= 1e4 || a < 1e-3)) {
    const exp = Math.floor(Math.log10(a));
    const mant = v / 10 ** exp;
    const m = Math.abs(mant - 1) < 1e-9 ? "" : `${mant.toPrecision(3)}x`;
    return `${m}1e${exp}`;
  }
  return String(Number(v.toPrecision(6)));
}

interface Scale {
  (v: number): number;
  ticks: number[];
}

function linearScale(lo: number, hi: number, out0: number, out1: number): Scale {
  if (hi <= lo) {
    hi = lo + 1;
  }
  const span = hi - lo;
  const step = niceStep(span / 5);
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push(Number(t.toPrecision(12)));
  }
  const fn = (v: number) => out0 + ((v - lo) / span) * (out1 - out0);
  return Object.assign(fn, { ticks });
}

function niceStep(raw: number): number {
  const exp = Math.floor(Math.log10(raw));
  const frac = raw / 10 ** exp;
  const nice = frac < 1.5 ? 1 : frac < 3.5 ? 2 : frac < 7.5 ? 5 : 10;
  return nice * 10 ** exp;
}

function logScale(lo: number, hi: number, out0: number, out1: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = Math.max(lhi - llo, 1e-12);
  const ticks: number[] = [];
  for (let d = Math.ceil(llo - 1e-9); d <= lhi + 1e-9; d += Math.max(1, Math.round(span / 8))) {
    ticks.push(10 ** d);
  }
  const fn = (v: number) => out0 + ((Math.log10(v) - llo) / span) * (out1 - out0);
  return Object.assign(fn, { ticks });
}

interface PanelOpts {
  series: Series[];
  xlabel: string;
  ylabel: string;
  xlog: boolean;
  ylog: boolean;
  x0: number;
  width: number;
  height: number;
  legend: boolean;
}

function renderPanel(o: PanelOpts): string {
  const mL = 62;
  const mR = 14;
  const mT = 16;
  const mB = 46;
  const px0 = o.x0 + mL;
  const px1 = o.x0 + o.width - mR;
  const py0 = o.height - mB;
  const py1 = mT;

  const pts = o.series.flatMap((s) =>
    s.x.map((x, i) => [x, s.y[i]] as const).filter(
      ([x, y]) =>
        Number.isFinite(x) &&
        Number.isFinite(y) &&
        (!o.xlog || x > 0) &&
        (!o.ylog || y > 0)
    )
  );
  if (pts.length === 0) {
    throw new Error("no plottable data points");
  }
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const sx = (o.xlog ? logScale : linearScale)(Math.min(...xs), Math.max(...xs), px0, px1);
  const sy = (o.ylog ? logScale : linearScale)(Math.min(...ys), Math.max(...ys), py0, py1);

  const parts: string[] = [];
  parts.push(
    `<rect x="${fmt(px0)}" y="${fmt(py1)}" width="${fmt(px1 - px0)}" height="${fmt(py0 - py1)}" fill="none" stroke="#333333" stroke-width="1"/>`
  );
  for (const t of sx.ticks) {
    const X = sx(t);
    if (X < px0 - 0.5 || X > px1 + 0.5) continue;
    parts.push(
      `<line x1="${fmt(X)}" y1="${fmt(py0)}" x2="${fmt(X)}" y2="${fmt(py1)}" stroke="#dddddd" stroke-width="0.5"/>`,
      `<text x="${fmt(X)}" y="${fmt(py0 + 16)}" ${FONT} font-size="10" text-anchor="middle">${fmtTick(t)}</text>`
    );
  }
  for (const t of sy.ticks) {
    const Y = sy(t);
    if (Y > py0 + 0.5 || Y < py1 - 0.5) continue;
    parts.push(
      `<line x1="${fmt(px0)}" y1="${fmt(Y)}" x2="${fmt(px1)}" y2="${fmt(Y)}" stroke="#dddddd" stroke-width="0.5"/>`,
      `<text x="${fmt(px0 - 5)}" y="${fmt(Y + 3)}" ${FONT} font-size="10" text-anchor="end">${fmtTick(t)}</text>`
    );
  }
  o.series.forEach((s, k) => {
    const color = PALETTE[k % PALETTE.length];
    const coords = s.x
      .map((x, i) => [x, s.y[i]] as const)
      .filter(
        ([x, y]) =>
          Number.isFinite(x) &&
          Number.isFinite(y) &&
          (!o.xlog || x > 0) &&
          (!o.ylog || y > 0)
      )
      .map(([x, y]) => `${fmt(sx(x))},${fmt(sy(y))}`);
    if (coords.length === 0) return;
    parts.push(
      `<polyline points="${coords.join(" ")}" fill="none" stroke="${color}" stroke-width="1.5"/>`
    );
  });
  if (o.legend) {
    o.series.forEach((s, k) => {
      const color = PALETTE[k % PALETTE.length];
      const Y = py1 + 14 + 14 * k;
      parts.push(
        `<line x1="${fmt(px0 + 8)}" y1="${fmt(Y - 3)}" x2="${fmt(px0 + 28)}" y2="${fmt(Y - 3)}" stroke="${color}" stroke-width="1.5"/>`,
        `<text x="${fmt(px0 + 33)}" y="${fmt(Y)}" ${FONT} font-size="10">${escapeXml(s.label)}</text>`
      );
    });
  }
  parts.push(
    `<text x="${fmt((px0 + px1) / 2)}" y="${fmt(o.height - 10)}" ${FONT} font-size="12" text-anchor="middle">${escapeXml(o.xlabel)}</text>`,
    `<text x="${fmt(o.x0 + 14)}" y="${fmt((py0 + py1) / 2)}" ${FONT} font-size="12" text-anchor="middle" transform="rotate(-90 ${fmt(o.x0 + 14)} ${fmt((py0 + py1) / 2)})">${escapeXml(o.ylabel)}</text>`
  );
  return parts.join("\n");
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function document(width: number, height: number, body: string): string {
  return (
    `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">\n` +
    `<rect width="${width}" height="${height}" fill="#ffffff"/>\n` +
    body +
    `\n</svg>\n`
  );
}

export function lineFigure(opts: {
  series: Series[];
  xlabel: string;
  ylabel: string;
  xlog?: boolean;
  ylog?: boolean;
}): string {
  const width = 560;
  const height = 420;
  const body = renderPanel({
    series: opts.series,
    xlabel: opts.xlabel,
    ylabel: opts.ylabel,
    xlog: opts.xlog ?? false,
    ylog: opts.ylog ?? false,
    x0: 0,
    width,
    height,
    legend: true,
  });
  return document(width, height, body);
}

export function twoPanelFigure(opts: {
  panels: { series: Series[]; ylabel: string }[];
  xlabel: string;
}): string {
  const panelW = 480;
  const height = 400;
  const width = panelW * opts.panels.length;
  const body = opts.panels
    .map((p, i) =>
      renderPanel({
        series: p.series,
        xlabel: opts.xlabel,
        ylabel: p.ylabel,
        xlog: false,
        ylog: false,
        x0: i * panelW,
        width: panelW,
        height,
        legend: i === 0,
      })
    )
    .join("\n");
  return document(width, height, body);
}

const RAMP: [number, number, number][] = [
  [68, 1, 84],
  [59, 82, 139],
  [33, 145, 140],
  [94, 201, 98],
  [253, 231, 37],
];

function rampColor(t: number): string {
  const u = Math.min(Math.max(t, 0), 1) * (RAMP.length - 1);
  const i = Math.min(Math.floor(u), RAMP.length - 2);
  const f = u - i;
  const c = RAMP[i].map((a, k) => Math.round(a + f * (RAMP[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

export function fieldFigure(opts: {
  x: number[];
  y: number[];
  v: number[];
  label: string;
}): string {
  const xs = Array.from(new Set(opts.x)).sort((a, b) => a - b);
  const ys = Array.from(new Set(opts.y)).sort((a, b) => a - b);
  const nx = xs.length;
  const ny = ys.length;
  if (nx * ny !== opts.v.length) {
    throw new Error(`field is not a full grid (${nx} x ${ny} != ${opts.v.length} rows)`);
  }
  const size = 440;
  const mL = 50;
  const mB = 40;
  const mT = 16;
  const barW = 64;
  const width = mL + size + barW + 60;
  const height = mT + size + mB;
  const vmin = Math.min(...opts.v);
  const vmax = Math.max(...opts.v);
  const span = vmax - vmin || 1;
  const cw = size / nx;
  const ch = size / ny;

  const parts: string[] = [];
  for (let r = 0; r < opts.v.length; r++) {
    // rows are row-major in x, then y
    const i = Math.floor(r / ny);
    const j = r % ny;
    const X = mL + i * cw;
    const Y = mT + (ny - 1 - j) * ch;
    parts.push(
      `<rect x="${fmt(X)}" y="${fmt(Y)}" width="${fmt(cw + 0.5)}" height="${fmt(ch + 0.5)}" fill="${rampColor((opts.v[r] - vmin) / span)}"/>`
    );
  }
  parts.push(
    `<rect x="${fmt(mL)}" y="${fmt(mT)}" width="${fmt(size)}" height="${fmt(size)}" fill="none" stroke="#333333"/>`
  );
  // axis extents
  parts.push(
    `<text x="${fmt(mL)}" y="${fmt(mT + size + 16)}" ${FONT} font-size="10" text-anchor="middle">${fmtTick(xs[0])}</text>`,
    `<text x="${fmt(mL + size)}" y="${fmt(mT + size + 16)}" ${FONT} font-size="10" text-anchor="middle">${fmtTick(xs[nx - 1])}</text>`,
    `<text x="${fmt(mL - 6)}" y="${fmt(mT + size)}" ${FONT} font-size="10" text-anchor="end">${fmtTick(ys[0])}</text>`,
    `<text x="${fmt(mL - 6)}" y="${fmt(mT + 8)}" ${FONT} font-size="10" text-anchor="end">${fmtTick(ys[ny - 1])}</text>`
  );
  // colorbar
  const cbX = mL + size + 24;
  const steps = 32;
  for (let k = 0; k < steps; k++) {
    const Y = mT + size - ((k + 1) * size) / steps;
    parts.push(
      `<rect x="${fmt(cbX)}" y="${fmt(Y)}" width="16" height="${fmt(size / steps + 0.5)}" fill="${rampColor((k + 0.5) / steps)}"/>`
    );
  }
  parts.push(
    `<rect x="${fmt(cbX)}" y="${fmt(mT)}" width="16" height="${fmt(size)}" fill="none" stroke="#333333"/>`,
    `<text x="${fmt(cbX + 22)}" y="${fmt(mT + size)}" ${FONT} font-size="10">${fmtTick(vmin)}</text>`,
    `<text x="${fmt(cbX + 22)}" y="${fmt(mT + 10)}" ${FONT} font-size="10">${fmtTick(vmax)}</text>`,
    `<text x="${fmt(cbX + 8)}" y="${fmt(mT - 4)}" ${FONT} font-size="11" text-anchor="middle">${escapeXml(opts.label)}</text>`
  );
  return document(width, height, parts.join("\n"));
}
