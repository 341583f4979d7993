/** Strict reader for the simple (unquoted, comma-separated) bundle CSVs. */

import { readFileSync } from "node:fs";
import type { FigureContract } from "./contracts.js";

export class ContractError extends Error {}

export type Row = Record<string, string | number>;

export function parseCsv(text: string): { header: string[]; rows: string[][] } {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new ContractError("file is empty");
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((line, i) => {
    const fields = line.split(",");
    if (fields.length !== header.length) {
      throw new ContractError(`row ${i + 2}: expected ${header.length} fields, got ${fields.length}`);
    }
    return fields;
  });
  return { header, rows };
}

/** Load a CSV and validate it against a figure contract. */
export function loadTable(path: string, contract: FigureContract): Row[] {
  let text: string;
  try {
    text = readFileSync(path, "ascii");
  } catch {
    throw new ContractError(`${contract.file}: file not found`);
  }
  let parsed;
  try {
    parsed = parseCsv(text);
  } catch (err) {
    throw new ContractError(`${contract.file}: ${(err as Error).message}`);
  }
  const { header, rows } = parsed;
  for (const column of contract.columns) {
    if (!header.includes(column)) {
      throw new ContractError(`${contract.file}: missing required column '${column}'`);
    }
  }
  for (const column of header) {
    if (!contract.columns.includes(column)) {
      throw new ContractError(`${contract.file}: unexpected column '${column}'`);
    }
  }
  if (rows.length === 0) {
    throw new ContractError(`${contract.file}: no data rows`);
  }
  const numeric = new Set(contract.numeric);
  return rows.map((fields, i) => {
    const row: Row = {};
    header.forEach((column, j) => {
      if (numeric.has(column)) {
        const value = Number(fields[j]);
        if (!Number.isFinite(value)) {
          throw new ContractError(
            `${contract.file}: row ${i + 2}: column '${column}' is not numeric (${fields[j]})`,
          );
        }
        row[column] = value;
      } else {
        row[column] = fields[j];
      }
    });
    return row;
  });
}

export function groupBy<T extends Row>(rows: T[], key: string): Map<string, T[]> {
  const groups = new Map<string, T[]>();
  for (const row of rows) {
    const label = String(row[key]);
    const bucket = groups.get(label);
    if (bucket) {
      bucket.push(row);
    } else {
      groups.set(label, [row]);
    }
  }
  return groups;
}
