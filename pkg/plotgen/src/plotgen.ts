#!/usr/bin/env node
/** plotgen <recipe.json> <outdir>
 *
 * Reads the simulation CLI's CSV artifacts named by the recipe, renders
 * a deterministic SVG figure and writes a sidecar JSON whose per-series
 * extrema are the exact column extrema (no resampling in between), the
 * anchor for visual regression.
 */

import { mkdirSync, readFileSync, renameSync, writeFileSync } from "fs";
import { basename, dirname, join, resolve } from "path";

import { CsvError, parseCsv, requireColumn } from "./csv.js";
import {
  FigureRecipe,
  RecipeError,
  labelLookup,
  loadRecipe,
  resolveInputs,
} from "./recipe.js";
import { PALETTE, Series, renderChart } from "./svg.js";

export interface SidecarSeries {
  label: string;
  file: string;
  points: number;
  x_min: number;
  x_max: number;
  y_min: number;
  y_max: number;
}

export interface Sidecar {
  figure: string;
  x_column: string;
  y_column: string;
  series: SidecarSeries[];
}

function exactExtrema(values: number[]): [number, number] {
  let lo = values[0];
  let hi = values[0];
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  return [lo, hi];
}

export function buildFigure(
  recipe: FigureRecipe,
  baseDir: string,
): { svg: string; sidecar: Sidecar } {
  const files = resolveInputs(recipe, baseDir);
  const labels = labelLookup(recipe, baseDir);
  const series: Series[] = [];
  const sidecarSeries: SidecarSeries[] = [];
  files.forEach((file, i) => {
    const table = parseCsv(readFileSync(file, "utf-8"), file);
    const x = requireColumn(table, recipe.x.column, file);
    const y = requireColumn(table, recipe.y.column, file);
    const label = labels.get(basename(file)) ?? basename(file, ".csv");
    const style = recipe.styles?.[label] ?? {};
    series.push({
      label,
      x,
      y,
      color: style.color ?? PALETTE[i % PALETTE.length],
      dash: style.dash,
      width: style.width ?? 1.5,
    });
    const [xLo, xHi] = exactExtrema(x);
    const [yLo, yHi] = exactExtrema(y);
    sidecarSeries.push({
      label,
      file: basename(file),
      points: x.length,
      x_min: xLo,
      x_max: xHi,
      y_min: yLo,
      y_max: yHi,
    });
  });

  const svg = renderChart({
    title: recipe.title ?? recipe.figure,
    xLabel: recipe.x.label ?? recipe.x.column,
    yLabel: recipe.y.label ?? recipe.y.column,
    yScale: recipe.y.scale ?? "linear",
    series,
  });
  return {
    svg,
    sidecar: {
      figure: recipe.figure,
      x_column: recipe.x.column,
      y_column: recipe.y.column,
      series: sidecarSeries,
    },
  };
}

function writeAtomic(path: string, data: string): void {
  const tmp = join(dirname(path), `.${basename(path)}.tmp`);
  writeFileSync(tmp, data);
  renameSync(tmp, path);
}

export function render(recipePath: string, outDir: string): Sidecar {
  const recipe = loadRecipe(recipePath);
  const baseDir = dirname(resolve(recipePath));
  const { svg, sidecar } = buildFigure(recipe, baseDir);
  mkdirSync(outDir, { recursive: true });
  writeAtomic(join(outDir, `${recipe.figure}.svg`), svg);
  writeAtomic(
    join(outDir, `${recipe.figure}.sidecar.json`),
    JSON.stringify(sidecar, null, 2) + "\n",
  );
  return sidecar;
}

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: plotgen <recipe.json> <outdir>");
    return 2;
  }
  try {
    const sidecar = render(argv[0], argv[1]);
    console.log(
      `rendered ${sidecar.figure}: ${sidecar.series.length} series -> ${argv[1]}`,
    );
    return 0;
  } catch (e) {
    if (e instanceof RecipeError || e instanceof CsvError) {
      console.error(`plotgen: ${e.message}`);
      return 2;
    }
    throw e;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
