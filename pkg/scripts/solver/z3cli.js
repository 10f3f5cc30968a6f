#!/usr/bin/env node
// Minimal SMT-LIB 2 runner on top of the z3-solver WASM build.
//
// Usage: node z3cli.js query.smt2
//
// Prints whatever Z3 prints for the script (sat/unsat/unknown plus any
// model), which is exactly the contract the analyzer's solver driver
// expects from an APC_SOLVER command.

const fs = require('fs');

async function main() {
  const path = process.argv[2];
  if (!path) {
    console.error('usage: z3cli.js <file.smt2>');
    process.exit(64);
  }
  const script = fs.readFileSync(path, 'utf8');
  const { init } = require('z3-solver');
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  try {
    const out = await Z3.eval_smtlib2_string(ctx, script);
    process.stdout.write(out.endsWith('\n') ? out : out + '\n');
  } catch (err) {
    console.log('(error "' + String(err).replace(/"/g, "'") + '")');
    process.exit(1);
  }
  process.exit(0);
}

main();
