/** Three-column comparison view for one delivery choice task.
 *
 * Columns: commercial carrier, crowd-shipping, physical store.  Rows: cost,
 * time, ecological contribution, flexibility.  The store column carries no
 * delivery attributes, so its cells render as an em dash.
 */

import type { AttributeRow, Channel, TaskPayload } from './types.js';

export class MalformedTaskError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'MalformedTaskError';
  }
}

export type Lang = 'en' | 'uk';

export interface ChoiceTaskView {
  taskId: number;
  /** Column order fixed for display: CC, CS, STORE. */
  columns: Array<{ id: Channel; label: string }>;
  rows: Array<{
    key: AttributeRow['key'];
    label: string;
    cells: Record<Channel, string>;
  }>;
  /** Legal values for the single-select control. */
  options: Channel[];
}

const COLUMN_ORDER: readonly Channel[] = ['CC', 'CS', 'STORE'];
const ROW_ORDER = ['cost', 'time', 'eco', 'flex'] as const;
const EMPTY_CELL = '—';

const YES = { en: 'Yes', uk: 'Так' } as const;
const NO = { en: 'No', uk: 'Ні' } as const;

function formatCell(row: AttributeRow, value: number | null, lang: Lang): string {
  if (value === null) return EMPTY_CELL;
  if (row.kind === 'boolean') return value ? YES[lang] : NO[lang];
  if (!Number.isFinite(value)) {
    throw new MalformedTaskError(`row ${row.key}: non-numeric value`);
  }
  return row.unit ? `${value} ${row.unit}` : `${value}`;
}

export function renderChoiceTask(
  payload: TaskPayload,
  lang: Lang = 'en',
): ChoiceTaskView {
  if (!payload || !Number.isInteger(payload.task_id)) {
    throw new MalformedTaskError('task_id missing');
  }
  const alternatives = payload.alternatives ?? [];
  const ids = alternatives.map((a) => a.id);
  if ([...ids].sort().join(',') !== 'CC,CS,STORE') {
    throw new MalformedTaskError(
      `task ${payload.task_id}: expected alternatives CS, CC, STORE`,
    );
  }
  const byKey = new Map((payload.attribute_rows ?? []).map((r) => [r.key, r]));
  const labelOf = new Map(
    alternatives.map((a) => [a.id, lang === 'uk' ? a.label_uk : a.label_en]),
  );

  const rows = ROW_ORDER.map((key) => {
    const row = byKey.get(key);
    if (!row) {
      throw new MalformedTaskError(`task ${payload.task_id}: missing row ${key}`);
    }
    const cells = {} as Record<Channel, string>;
    for (const channel of COLUMN_ORDER) {
      if (!(channel in row.values)) {
        throw new MalformedTaskError(
          `task ${payload.task_id}: row ${key} lacks a ${channel} value`,
        );
      }
      cells[channel] = formatCell(row, row.values[channel], lang);
    }
    return { key, label: lang === 'uk' ? row.label_uk : row.label_en, cells };
  });

  return {
    taskId: payload.task_id,
    columns: COLUMN_ORDER.map((id) => ({ id, label: labelOf.get(id) ?? id })),
    rows,
    options: [...COLUMN_ORDER],
  };
}
