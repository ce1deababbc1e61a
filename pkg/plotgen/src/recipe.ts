/** Figure recipes: which CSVs to plot, how to label and style them. */

import { readFileSync, readdirSync, existsSync, statSync } from "fs";
import { dirname, join, resolve, basename } from "path";

export const FIGURE_IDS = [
  "fig3",
  "fig4",
  "fig5",
  "fig6",
  "fig7",
  "pm_decay",
  "echo",
] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

export interface AxisSpec {
  column: string;
  label: string;
  scale?: "linear" | "log";
}

export interface SeriesStyle {
  color?: string;
  dash?: string;
  width?: number;
}

export interface FigureRecipe {
  figure: FigureId;
  /** CSV globs (only '*' wildcards, in the basename) */
  inputs: string[];
  x: AxisSpec;
  y: AxisSpec;
  /** line styles keyed by series label */
  styles?: Record<string, SeriesStyle>;
  /** optional curve-metadata JSON (label lookup per file name) */
  labels_from?: string;
  title?: string;
}

export class RecipeError extends Error {}

export function loadRecipe(path: string): FigureRecipe {
  let raw: string;
  try {
    raw = readFileSync(path, "utf-8");
  } catch {
    throw new RecipeError(`recipe not found: ${path}`);
  }
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch (e) {
    throw new RecipeError(`recipe is not valid JSON: ${e}`);
  }
  const r = obj as Partial<FigureRecipe>;
  if (!r.figure || !(FIGURE_IDS as readonly string[]).includes(r.figure)) {
    throw new RecipeError(
      `recipe needs figure id from {${FIGURE_IDS.join(", ")}}`,
    );
  }
  if (!Array.isArray(r.inputs) || r.inputs.length === 0) {
    throw new RecipeError("recipe needs a non-empty inputs list");
  }
  for (const ax of ["x", "y"] as const) {
    const spec = r[ax];
    if (!spec || typeof spec.column !== "string") {
      throw new RecipeError(`recipe needs ${ax}.column`);
    }
  }
  return r as FigureRecipe;
}

/** Expand a glob (wildcards in the basename only) relative to baseDir. */
export function expandGlob(pattern: string, baseDir: string): string[] {
  const full = resolve(baseDir, pattern);
  const dir = dirname(full);
  const pat = basename(full);
  if (!pat.includes("*")) {
    return existsSync(full) && statSync(full).isFile() ? [full] : [];
  }
  if (!existsSync(dir)) return [];
  const rx = new RegExp(
    "^" + pat.split("*").map(escapeRegex).join(".*") + "$",
  );
  return readdirSync(dir)
    .filter((name) => rx.test(name))
    .sort()
    .map((name) => join(dir, name));
}

function escapeRegex(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

export function resolveInputs(recipe: FigureRecipe, baseDir: string): string[] {
  const files: string[] = [];
  for (const pattern of recipe.inputs) {
    files.push(...expandGlob(pattern, baseDir));
  }
  const unique = [...new Set(files)].sort();
  if (unique.length === 0) {
    throw new RecipeError(
      `no inputs matched: ${recipe.inputs.join(", ")} (base ${baseDir})`,
    );
  }
  return unique;
}

/** Per-file labels from a curve-metadata JSON emitted alongside the CSVs. */
export function labelLookup(
  recipe: FigureRecipe,
  baseDir: string,
): Map<string, string> {
  const out = new Map<string, string>();
  if (!recipe.labels_from) return out;
  const path = resolve(baseDir, recipe.labels_from);
  if (!existsSync(path)) {
    throw new RecipeError(`labels_from not found: ${path}`);
  }
  const meta = JSON.parse(readFileSync(path, "utf-8")) as {
    curves?: { file: string; label: string }[];
  };
  for (const c of meta.curves ?? []) {
    out.set(c.file, c.label);
  }
  return out;
}
