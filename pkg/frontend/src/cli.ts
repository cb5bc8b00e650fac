#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { plotOtoc } from "./otoc.js";
import { plotPageCurve } from "./page.js";
import { SchemaError } from "./schema.js";

async function run(): Promise<number> {
  await yargs(hideBin(process.argv))
    .scriptName("commutant-plots")
    .command(
      "otoc",
      "render an OTOC time series with its predicted saturation line",
      (cmd) => cmd
        .option("series", { type: "string", array: true, demandOption: true,
                            describe: "series.csv path (repeat to overlay runs)" })
        .option("sidecar", { type: "string", array: true, demandOption: true,
                             describe: "matching sidecar.json path(s)" })
        .option("out", { type: "string", demandOption: true }),
      (argv) => {
        if (argv.series.length !== argv.sidecar.length) {
          throw new SchemaError("need one sidecar per series file");
        }
        const pairs = argv.series.map((csv: string, i: number) =>
          ({ csv, sidecar: argv.sidecar[i] }));
        plotOtoc(pairs, argv.out);
        console.log(`wrote ${argv.out}`);
      },
    )
    .command(
      "page",
      "render a Page curve from renyi2 sidecars with both closed-form overlays",
      (cmd) => cmd
        .option("sidecar", { type: "string", array: true, demandOption: true,
                             describe: "renyi2 sidecar.json paths, one per subsystem size" })
        .option("out", { type: "string", demandOption: true }),
      (argv) => {
        plotPageCurve(argv.sidecar, argv.out);
        console.log(`wrote ${argv.out}`);
      },
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => { throw err ?? new Error(msg); })
    .parseAsync();
  return 0;
}

run().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err instanceof SchemaError ? `schema error: ${err.message}` : String(err));
    process.exit(1);
  },
);
