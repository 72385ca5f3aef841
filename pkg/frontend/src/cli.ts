#!/usr/bin/env node
/**
 * popnet-plot — render simulator run directories as SVG charts.
 *
 *   popnet-plot trajectories --in runs/demo --out traj.svg
 *   popnet-plot utility      --in runs/demo --out utility.svg --logtime 5e-5
 *
 * `--in` is a directory written by `popnet simulate` (and, optionally,
 * `popnet bounds`).  Exit code 1 on missing or unusable inputs.
 */

import { writeFileSync } from "fs";
import { pathToFileURL } from "url";
import yargs from "yargs";
import type { Argv } from "yargs";

import { buildPanel, composeSvg, HLine, Series } from "./chart.js";
import { Bounds, discoverTrajectories, readBounds, Trajectory } from "./data.js";

const DYN_COLOR: Record<string, string> = {
  ssd: "#4361ee",
  nbrd: "#e63946",
  nrpm: "#2d6a4f",
};

const NODE_COLORS = [
  "#4361ee", "#e63946", "#2d6a4f", "#f77f00", "#9d4edd",
  "#0096c7", "#b5179e", "#606c38", "#bc6c25", "#495057",
];

interface PlotArgs {
  in: string;
  out: string;
  logtime: number;
}

// ---------------------------------------------------------------------------

function trajectoriesSvg(trajs: Trajectory[], k: number): string {
  const panels = trajs.map((traj) => {
    const series: Series[] = traj.x.map((xs, i) => ({
      label: `x_${i + 1}`,
      color: NODE_COLORS[i % NODE_COLORS.length],
      t: traj.t,
      values: xs,
    }));
    return buildPanel({
      title: `${traj.dynamic} — node masses (${traj.file})`,
      yLabel: "mass",
      logtimeK: k,
      series,
    });
  });
  return composeSvg(panels);
}

function utilitySvg(trajs: Trajectory[], bounds: Bounds | null, k: number): string {
  const series: Series[] = trajs.map((traj) => ({
    label: `U (${traj.dynamic})`,
    color: DYN_COLOR[traj.dynamic],
    t: traj.t,
    values: traj.U,
    width: 1.2,
    finalRole: traj.dynamic,
  }));
  const hLines: HLine[] = [];
  if (bounds) {
    hLines.push(
      { value: bounds.uMax, color: "#2d6a4f", label: `upper bound ${bounds.uMax.toFixed(4)}`, role: "bound-upper" },
      { value: bounds.uMin, color: "#bc6c25", label: `lower bound ${bounds.uMin.toFixed(4)}`, role: "bound-lower" }
    );
  }
  return composeSvg([
    buildPanel({
      title: "social utility over time",
      yLabel: "U",
      logtimeK: k,
      series,
      hLines,
    }),
  ]);
}

// ---------------------------------------------------------------------------

function plot(kind: "trajectories" | "utility", args: PlotArgs): number {
  let trajs: Trajectory[];
  try {
    trajs = discoverTrajectories(args.in);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  if (trajs.length === 0) {
    console.error(`error: no trajectory CSVs in ${args.in}`);
    return 1;
  }

  let svg: string;
  if (kind === "trajectories") {
    svg = trajectoriesSvg(trajs, args.logtime);
  } else {
    let bounds: Bounds | null = null;
    try {
      bounds = readBounds(args.in);
    } catch (err) {
      console.error(`error: ${(err as Error).message}`);
      return 1;
    }
    if (!bounds) {
      console.error(`warning: no bounds report in ${args.in}; plotting utilities only`);
    }
    svg = utilitySvg(trajs, bounds, args.logtime);
  }

  writeFileSync(args.out, svg);
  console.log(`SVG -> ${args.out}`);
  return 0;
}

export function run(argv: string[]): number {
  let code = 0;
  const addOpts = (y: Argv) =>
    y
      .option("in", { type: "string", demandOption: true, describe: "run directory" })
      .option("out", { type: "string", demandOption: true, describe: "output SVG file" })
      .option("logtime", {
        type: "number",
        default: 5e-5,
        describe: "k in the x-axis transform log(t/k + 1)",
      });

  yargs(argv)
    .scriptName("popnet-plot")
    .command(
      "trajectories",
      "per-node mass curves, one panel per dynamic",
      addOpts,
      (a) => {
        code = plot("trajectories", a as unknown as PlotArgs);
      }
    )
    .command(
      "utility",
      "social utility curves with bound lines",
      addOpts,
      (a) => {
        code = plot("utility", a as unknown as PlotArgs);
      }
    )
    .demandCommand(1)
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      console.error(`error: ${msg ?? err?.message}`);
      code = 1;
    })
    .parseSync();
  return code;
}

if (import.meta.url === pathToFileURL(process.argv[1] ?? "").href) {
  process.exit(run(process.argv.slice(2)));
}
