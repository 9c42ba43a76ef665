#!/usr/bin/env node
/** Render publication-style SVG figures from overlayhp benchmark CSVs.
 *
 *   figures <kind> --in <csv...> --out <file> [--labels ...] [--column ...]
 *
 * Kinds: loglog-convergence, loglog-sweep, time-history, field-map.
 */

import { writeFileSync } from "fs";
import { basename } from "path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { column, expectColumns, readTable, Table } from "./csv.js";
import { fieldFigure, lineFigure, Series, twoPanelFigure } from "./svg.js";

const KINDS = ["loglog-convergence", "loglog-sweep", "time-history", "field-map"] as const;
type Kind = (typeof KINDS)[number];

function seriesLabel(labels: string[] | undefined, i: number, fallback: string): string {
  return labels && labels[i] !== undefined ? labels[i] : fallback;
}

function convergenceFigure(tables: Table[], labels?: string[]): string {
  const series: Series[] = tables.map((t, i) => {
    expectColumns(t, ["N", "E"]);
    return {
      label: seriesLabel(labels, i, basename(t.path, ".csv")),
      x: column(t, "N"),
      y: column(t, "E"),
    };
  });
  return lineFigure({
    series,
    xlabel: "Total number of unknowns N",
    ylabel: "Relative energy-norm error in %",
    xlog: true,
    ylog: true,
  });
}

function sweepFigure(tables: Table[], labels?: string[]): string {
  if (tables.length !== 1) {
    throw new Error("loglog-sweep expects exactly one CSV");
  }
  const t = tables[0];
  expectColumns(t, ["o", "p1", "p2", "p3", "p4", "p5", "p6", "p7", "p8"]);
  const etas = column(t, "o");
  const series: Series[] = t.columns.slice(1).map((name, i) => ({
    label: seriesLabel(labels, i, name),
    x: etas,
    y: column(t, name),
  }));
  return lineFigure({
    series,
    xlabel: "Overlap",
    ylabel: basename(t.path).includes("pcg") ? "PCG iterations" : "Condition number",
    xlog: true,
    ylog: true,
  });
}

function historyFigure(tables: Table[], labels?: string[]): string {
  const named = tables.map((t, i) => {
    expectColumns(t, ["step", "t", "T", "gradT"]);
    return { t, label: seriesLabel(labels, i, basename(t.path, ".csv")) };
  });
  const temp: Series[] = named.map(({ t, label }) => ({
    label,
    x: column(t, "t"),
    y: column(t, "T"),
  }));
  const grad: Series[] = named.map(({ t, label }) => ({
    label,
    x: column(t, "t"),
    y: column(t, "gradT"),
  }));
  return twoPanelFigure({
    panels: [
      { series: temp, ylabel: "Temperature" },
      { series: grad, ylabel: "Temperature gradient magnitude" },
    ],
    xlabel: "Time",
  });
}

function fieldMapFigure(tables: Table[], columnChoice: string): string {
  if (tables.length !== 1) {
    throw new Error("field-map expects exactly one CSV");
  }
  const t = tables[0];
  expectColumns(t, ["x", "y", "value", "grad_x", "grad_y"]);
  let v: number[];
  let label: string;
  if (columnChoice === "grad") {
    const gx = column(t, "grad_x");
    const gy = column(t, "grad_y");
    v = gx.map((g, i) => Math.hypot(g, gy[i]));
    label = "|grad|";
  } else {
    v = column(t, "value");
    label = "value";
  }
  return fieldFigure({ x: column(t, "x"), y: column(t, "y"), v, label });
}

export function render(kind: Kind, inputs: string[], out: string, labels?: string[], columnChoice = "value"): void {
  const tables = inputs.map(readTable);
  let svg: string;
  switch (kind) {
    case "loglog-convergence":
      svg = convergenceFigure(tables, labels);
      break;
    case "loglog-sweep":
      svg = sweepFigure(tables, labels);
      break;
    case "time-history":
      svg = historyFigure(tables, labels);
      break;
    case "field-map":
      svg = fieldMapFigure(tables, columnChoice);
      break;
  }
  writeFileSync(out, svg);
}

export function main(argv: string[]): number {
  try {
    const args = yargs(argv)
      .scriptName("figures")
      .command("$0 <kind>", "render a figure", (y) =>
        y.positional("kind", { choices: KINDS as unknown as string[], demandOption: true })
      )
      .option("in", { type: "string", array: true, demandOption: true, describe: "input CSV file(s)" })
      .option("out", { type: "string", demandOption: true, describe: "output SVG path" })
      .option("labels", { type: "string", array: true, describe: "series labels" })
      .option("column", {
        type: "string",
        choices: ["value", "grad"],
        default: "value",
        describe: "field-map quantity",
      })
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseSync();
    render(
      args.kind as Kind,
      args.in as string[],
      args.out as string,
      args.labels as string[] | undefined,
      args.column as string
    );
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

const isMain = process.argv[1] !== undefined && import.meta.url.endsWith(basename(process.argv[1]));
if (isMain) {
  process.exit(main(hideBin(process.argv)));
}
