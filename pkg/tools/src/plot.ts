/**
 * Throughput scaling chart from a bench CSV: log2 keypoints on x, log2
 * throughput on y, one series per (config, path) with the fused path solid
 * and the naive path dashed.  Output is a standalone SVG.
 */
import { readFileSync, writeFileSync } from "node:fs";

export interface BenchRow {
  config: string;
  path: string;
  nKeypoints: number;
  block: number;
  wallMs: number;
  imagesPerS: number;
  peakAuxScalars: number;
}

const EXPECTED_HEADER =
  "config,path,n_keypoints,block,wall_ms,images_per_s,peak_aux_scalars,repeats";

export function parseBenchCsv(text: string): BenchRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0 || !lines[0].startsWith("# cldfeat-bench-csv")) {
    throw new Error("not a cldfeat bench CSV (missing schema comment)");
  }
  if (lines.length < 2 || lines[1] !== EXPECTED_HEADER) {
    throw new Error("unexpected bench CSV header row");
  }
  const rows: BenchRow[] = [];
  for (const line of lines.slice(2)) {
    const cols = line.split(",");
    if (cols.length !== 8) throw new Error(`malformed bench CSV row: ${line}`);
    rows.push({
      config: cols[0],
      path: cols[1],
      nKeypoints: Number(cols[2]),
      block: Number(cols[3]),
      wallMs: Number(cols[4]),
      imagesPerS: Number(cols[5]),
      peakAuxScalars: Number(cols[6]),
    });
    const r = rows[rows.length - 1];
    if (!Number.isFinite(r.nKeypoints) || !Number.isFinite(r.imagesPerS)) {
      throw new Error(`non-numeric bench CSV row: ${line}`);
    }
  }
  if (rows.length === 0) throw new Error("bench CSV has no data rows");
  return rows;
}

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#e377c2", "#17becf", "#bcbd22",
];

interface Series {
  key: string;
  config: string;
  path: string;
  points: Array<[number, number]>; // (log2 n, log2 throughput)
}

export function buildSeries(rows: BenchRow[]): Series[] {
  const groups = new Map<string, Series>();
  for (const row of rows) {
    const key = `${row.config}/${row.path}`;
    let series = groups.get(key);
    if (!series) {
      series = { key, config: row.config, path: row.path, points: [] };
      groups.set(key, series);
    }
    series.points.push([Math.log2(row.nKeypoints), Math.log2(row.imagesPerS)]);
  }
  for (const series of groups.values()) {
    series.points.sort((a, b) => a[0] - b[0]);
  }
  return [...groups.values()];
}

export function renderSvg(rows: BenchRow[], width = 720, height = 480): string {
  const series = buildSeries(rows);
  const margin = { left: 70, right: 170, top: 40, bottom: 55 };
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const xMin = Math.floor(Math.min(...xs));
  const xMax = Math.ceil(Math.max(...xs));
  const yMin = Math.floor(Math.min(...ys));
  const yMax = Math.ceil(Math.max(...ys));
  const plotW = width - margin.left - margin.right;
  const plotH = height - margin.top - margin.bottom;
  const px = (x: number) => margin.left + ((x - xMin) / Math.max(xMax - xMin, 1)) * plotW;
  const py = (y: number) => margin.top + plotH - ((y - yMin) / Math.max(yMax - yMin, 1)) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="20" text-anchor="middle" font-size="15">` +
      `Description throughput vs keypoint count (log2-log2)</text>`
  );

  // axes with power-of-two ticks
  for (let x = xMin; x <= xMax; x++) {
    parts.push(
      `<line x1="${px(x)}" y1="${margin.top}" x2="${px(x)}" y2="${margin.top + plotH}" ` +
        `stroke="#dddddd"/>`,
      `<text x="${px(x)}" y="${margin.top + plotH + 18}" text-anchor="middle">2^${x}</text>`
    );
  }
  for (let y = yMin; y <= yMax; y++) {
    parts.push(
      `<line x1="${margin.left}" y1="${py(y)}" x2="${margin.left + plotW}" y2="${py(y)}" ` +
        `stroke="#dddddd"/>`,
      `<text x="${margin.left - 8}" y="${py(y) + 4}" text-anchor="end">2^${y}</text>`
    );
  }
  parts.push(
    `<text x="${margin.left + plotW / 2}" y="${height - 12}" text-anchor="middle">` +
      `keypoints (log2 scale)</text>`,
    `<text x="18" y="${margin.top + plotH / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${margin.top + plotH / 2})">throughput, images/s (log2 scale)</text>`
  );

  const configs = [...new Set(series.map((s) => s.config))];
  series.sort((a, b) => a.key.localeCompare(b.key));
  for (const s of series) {
    const color = PALETTE[configs.indexOf(s.config) % PALETTE.length];
    const dash = s.path === "naive" ? ' stroke-dasharray="7 5"' : "";
    const coords = s.points.map(([x, y]) => `${px(x).toFixed(1)},${py(y).toFixed(1)}`).join(" ");
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="2"${dash}/>`
    );
    for (const [x, y] of s.points) {
      parts.push(`<circle cx="${px(x).toFixed(1)}" cy="${py(y).toFixed(1)}" r="3" fill="${color}"/>`);
    }
  }

  // legend
  let ly = margin.top + 10;
  for (const s of series) {
    const color = PALETTE[configs.indexOf(s.config) % PALETTE.length];
    const dash = s.path === "naive" ? ' stroke-dasharray="7 5"' : "";
    const lx = width - margin.right + 12;
    parts.push(
      `<line x1="${lx}" y1="${ly}" x2="${lx + 28}" y2="${ly}" stroke="${color}" stroke-width="2"${dash}/>`,
      `<text x="${lx + 34}" y="${ly + 4}">${s.config} ${s.path}</text>`
    );
    ly += 18;
  }
  parts.push("</svg>");
  return parts.join("\n");
}

export function plotBench(csvPath: string, outPath: string): number {
  const rows = parseBenchCsv(readFileSync(csvPath, "utf-8"));
  writeFileSync(outPath, renderSvg(rows));
  return buildSeries(rows).length;
}
