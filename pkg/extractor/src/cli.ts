#!/usr/bin/env node
import { parseArgs } from "node:util";

import { runExtract } from "./extract.js";
import type { EmitMode } from "./types.js";

const USAGE = `Usage: relex-extract --corpus <dir> --encoder <spec> --out <dir>
                     [--window 512] [--emit tokens|pairs|both]

Encoders: hash:<dim>[:seed] (deterministic offline), hf:<model-id>
(requires @huggingface/transformers). The corpus directory must contain
corpus.jsonl and relations.json.`;

export async function main(argv: string[]): Promise<number> {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        corpus: { type: "string" },
        encoder: { type: "string" },
        out: { type: "string" },
        window: { type: "string", default: "512" },
        emit: { type: "string", default: "both" },
        help: { type: "boolean", default: false },
      },
    }));
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n${USAGE}\n`);
    return 1;
  }
  if (values.help) {
    process.stdout.write(USAGE + "\n");
    return 0;
  }
  for (const required of ["corpus", "encoder", "out"] as const) {
    if (!values[required]) {
      process.stderr.write(`missing --${required}\n${USAGE}\n`);
      return 1;
    }
  }
  if (!["tokens", "pairs", "both"].includes(values.emit!)) {
    process.stderr.write(`bad --emit ${values.emit}\n${USAGE}\n`);
    return 1;
  }
  try {
    const summary = await runExtract({
      corpusDir: values.corpus!,
      encoderSpec: values.encoder!,
      window: Number(values.window),
      outDir: values.out!,
      emit: values.emit as EmitMode,
    });
    process.stdout.write(JSON.stringify(summary, null, 2) + "\n");
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
