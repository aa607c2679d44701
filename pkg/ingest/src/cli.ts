#!/usr/bin/env node
// ingest --csv items.csv --out dir
// Progress goes to stdout as JSON lines; a run that converts nothing exits 2.

import { parseArgs } from 'node:util';

import { runIngest } from './convert';

const USAGE = 'usage: ingest --csv items.csv --out dir\n';

export async function main(argv: string[]): Promise<number> {
  let values: { csv?: string; out?: string };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: { csv: { type: 'string' }, out: { type: 'string' } },
    }));
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n${USAGE}`);
    return 1;
  }
  if (!values.csv || !values.out) {
    process.stderr.write(USAGE);
    return 1;
  }
  const log = (event: object) => process.stdout.write(JSON.stringify(event) + '\n');
  try {
    const result = await runIngest(values.csv, values.out, log);
    log({ event: 'done', ...result, out: values.out });
    return 0;
  } catch (err) {
    process.stderr.write(JSON.stringify({ event: 'error', reason: (err as Error).message }) + '\n');
    return 2;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then(code => {
    process.exitCode = code;
  });
}
