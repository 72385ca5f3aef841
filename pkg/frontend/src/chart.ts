/**
 * Minimal SVG line charts on a logarithmic time axis.
 *
 * Simulated runs spend most of their steps creeping toward a steady state,
 * so panels plot against xi = log(t/k + 1): linear near t = 0, logarithmic
 * in the tail.  Bound lines and final values carry data-role / data-value
 * attributes so tests can read numbers back out of the image.
 */

export interface Series {
  label: string;
  color: string;
  t: number[];
  values: number[];
  width?: number;
  opacity?: number;
  dash?: string;
  /** emit a marker + data attributes at the last sample */
  finalRole?: string;
}

export interface HLine {
  value: number;
  color: string;
  label: string;
  role: string;
  dash?: string;
}

export interface PanelOpts {
  title: string;
  yLabel: string;
  logtimeK: number;
  series: Series[];
  hLines?: HLine[];
}

export interface Panel {
  body: string;
  height: number;
}

export const WIDTH = 700;
const PANEL_H = 260;
const ML = 58,
  MR = 20,
  MT = 30,
  MB = 40;

export function logTime(k: number): (t: number) => number {
  return (t) => Math.log(t / k + 1);
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((n) => n >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + step * 0.01; v += step)
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  return ticks;
}

/** 0 plus the powers of ten up to tMax — readable anchors for the log axis. */
function timeTicks(tMax: number): number[] {
  const ticks = [0];
  if (tMax <= 0) return ticks;
  const hi = Math.floor(Math.log10(tMax));
  for (let j = Math.max(hi - 5, -2); j <= hi; j++) ticks.push(Math.pow(10, j));
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const j = Math.log10(v);
  if (j >= 4 || j <= -3) return `1e${Math.round(j)}`;
  return String(v);
}

function fmtVal(v: number): string {
  return Math.abs(v) >= 100 || (v !== 0 && Math.abs(v) < 0.01)
    ? v.toExponential(2)
    : v.toFixed(3).replace(/\.?0+$/, "") || "0";
}

// ---------------------------------------------------------------------------

export function buildPanel(opts: PanelOpts): Panel {
  const { series, hLines = [] } = opts;
  const xi = logTime(opts.logtimeK);
  const pw = WIDTH - ML - MR;
  const ph = PANEL_H - MT - MB;

  const tMax = Math.max(...series.map((s) => s.t[s.t.length - 1]), 0);
  const xiMax = xi(tMax) || 1;
  const xOf = (t: number) => ML + (xi(t) / xiMax) * pw;

  // loop rather than spread: long runs log far more samples than the
  // engine's argument limit
  let yMin = 0;
  let yMax = -Infinity;
  for (const sr of series) {
    for (const v of sr.values) {
      if (v < yMin) yMin = v;
      if (v > yMax) yMax = v;
    }
  }
  for (const hl of hLines) {
    if (hl.value < yMin) yMin = hl.value;
    if (hl.value > yMax) yMax = hl.value;
  }
  const pad = (yMax - yMin || 1) * 0.08;
  yMin -= pad / 4;
  yMax += pad;
  const yOf = (v: number) => MT + ph - ((v - yMin) / (yMax - yMin)) * ph;

  let s = "";
  s += `<text x="${ML}" y="${MT - 10}" font-size="10" font-weight="600" fill="#222">${esc(opts.title)}</text>\n`;

  const yTicks = niceTicks(yMin, yMax, 5);
  for (const v of yTicks) {
    const y = yOf(v).toFixed(1);
    s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="#eee" stroke-width="0.5"/>\n`;
    s += `<text x="${ML - 5}" y="${(yOf(v) + 3).toFixed(1)}" text-anchor="end" font-size="6.5" fill="#666">${esc(fmtVal(v))}</text>\n`;
  }

  for (const hl of hLines) {
    const y = yOf(hl.value).toFixed(1);
    s += `<line x1="${ML}" y1="${y}" x2="${ML + pw}" y2="${y}" stroke="${hl.color}" stroke-width="1" stroke-dasharray="${hl.dash ?? "6,3"}" data-role="${hl.role}" data-value="${hl.value}"/>\n`;
    s += `<text x="${ML + 3}" y="${(yOf(hl.value) - 3).toFixed(1)}" font-size="6.5" fill="${hl.color}">${esc(hl.label)}</text>\n`;
  }

  for (const sr of series) {
    // dense logs put thousands of samples inside one pixel; keep the first,
    // the last, and any point at least a quarter-pixel right of the previous
    const keep: number[] = [];
    let lastX = -Infinity;
    for (let i = 0; i < sr.t.length; i++) {
      const px = xOf(sr.t[i]);
      if (px - lastX >= 0.25 || i === sr.t.length - 1) {
        keep.push(i);
        lastX = px;
      }
    }
    const pts = keep
      .map((i) => `${xOf(sr.t[i]).toFixed(1)},${yOf(sr.values[i]).toFixed(1)}`)
      .join(" ");
    const dash = sr.dash ? ` stroke-dasharray="${sr.dash}"` : "";
    s += `<polyline fill="none" stroke="${sr.color}" stroke-width="${sr.width ?? 1}" opacity="${sr.opacity ?? 1}"${dash} points="${pts}"/>\n`;
    if (sr.finalRole) {
      const last = sr.values[sr.values.length - 1];
      s += `<circle cx="${xOf(sr.t[sr.t.length - 1]).toFixed(1)}" cy="${yOf(last).toFixed(1)}" r="2" fill="${sr.color}" data-role="final" data-series="${esc(sr.finalRole)}" data-value="${last}"/>\n`;
    }
  }

  s += `<line x1="${ML}" y1="${MT}" x2="${ML}" y2="${MT + ph}" stroke="#333" stroke-width="0.7"/>\n`;
  s += `<line x1="${ML}" y1="${MT + ph}" x2="${ML + pw}" y2="${MT + ph}" stroke="#333" stroke-width="0.7"/>\n`;

  for (const t of timeTicks(tMax)) {
    const x = xOf(t).toFixed(1);
    s += `<line x1="${x}" y1="${MT + ph}" x2="${x}" y2="${MT + ph + 3}" stroke="#333" stroke-width="0.5"/>\n`;
    s += `<text x="${x}" y="${MT + ph + 12}" text-anchor="middle" font-size="6.5" fill="#666">${esc(fmtTick(t))}</text>\n`;
  }
  s += `<text x="${ML + pw / 2}" y="${PANEL_H - 6}" text-anchor="middle" font-size="8" fill="#444">t (log scale)</text>\n`;
  s += `<text x="12" y="${MT + ph / 2}" text-anchor="middle" font-size="8" fill="#444" transform="rotate(-90,12,${MT + ph / 2})">${esc(opts.yLabel)}</text>\n`;

  // legend, top-right of the plot area
  const lw = Math.max(...series.concat().map((sr) => sr.label.length), ...hLines.map((h) => h.label.length)) * 4.5 + 24;
  const entries = [...series, ...hLines.map((h) => ({ label: h.label, color: h.color, dash: h.dash ?? "6,3", width: 1, opacity: 1 }))];
  s += `<rect x="${ML + pw - lw - 4}" y="${MT + 1}" width="${lw + 8}" height="${entries.length * 10 + 6}" rx="2" fill="white" fill-opacity="0.85"/>\n`;
  entries.forEach((e, i) => {
    const lx = ML + pw - lw;
    const ly = MT + 8 + i * 10;
    const dash = "dash" in e && e.dash ? ` stroke-dasharray="${e.dash}"` : "";
    s += `<line x1="${lx}" y1="${ly}" x2="${lx + 14}" y2="${ly}" stroke="${e.color}" stroke-width="${Math.min(e.width ?? 1, 1.5)}"${dash} opacity="${e.opacity ?? 1}"/>\n`;
    s += `<text x="${lx + 18}" y="${ly + 2.5}" font-size="6.5" fill="#444">${esc(e.label)}</text>\n`;
  });

  return { body: s, height: PANEL_H };
}

/** Stack panels vertically into one standalone SVG document. */
export function composeSvg(panels: Panel[]): string {
  const height = panels.reduce((a, p) => a + p.height, 0);
  let s = `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${height}" font-family="Helvetica, Arial, sans-serif">\n`;
  s += `<rect width="${WIDTH}" height="${height}" fill="#fff"/>\n`;
  let y = 0;
  for (const p of panels) {
    s += y === 0 ? p.body : `<g transform="translate(0,${y})">\n${p.body}</g>\n`;
    y += p.height;
  }
  s += `</svg>\n`;
  return s;
}
