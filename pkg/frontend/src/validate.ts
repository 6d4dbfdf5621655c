/** Client-side validation mirroring the service's field rules.
 *
 * Error strings use the same ``section.field: message`` addressing the
 * server emits, so one mapping layer serves both local and server errors.
 */

import type {
  Channel,
  Demographics,
  ImportanceKey,
  SupplyAnswers,
} from './types.js';
import {
  CHANNELS,
  CS_MODES,
  EMPLOYMENT_STATUSES,
  GENDERS,
  IMPORTANCE_KEYS,
} from './types.js';

function isInt(value: unknown): value is number {
  return typeof value === 'number' && Number.isInteger(value);
}

function isNum(value: unknown): value is number {
  return typeof value === 'number' && Number.isFinite(value);
}

export function validateDemographics(d: Partial<Demographics>): string[] {
  const errors: string[] = [];
  const need = (name: keyof Demographics, ok: boolean, message: string) => {
    if (d[name] === undefined) errors.push(`demographics.${name}: missing`);
    else if (!ok) errors.push(`demographics.${name}: ${message}`);
  };
  need('age_years', isInt(d.age_years) && (d.age_years as number) >= 18,
    'must be an integer >= 18');
  need('gender', GENDERS.includes(d.gender as never),
    `must be one of ${GENDERS.join(', ')}`);
  need('household_size', isInt(d.household_size) && (d.household_size as number) >= 1,
    'must be an integer >= 1');
  need('n_children', isInt(d.n_children) && (d.n_children as number) >= 0,
    'must be an integer >= 0');
  need('car_in_household', d.car_in_household === 0 || d.car_in_household === 1,
    'must be 0 or 1');
  need('income_uah_month', isNum(d.income_uah_month) && (d.income_uah_month as number) > 0,
    'must be a number > 0');
  need('employment', EMPLOYMENT_STATUSES.includes(d.employment as never),
    `must be one of ${EMPLOYMENT_STATUSES.join(', ')}`);
  need('education_high', d.education_high === 0 || d.education_high === 1,
    'must be 0 or 1');
  return errors;
}

export function validateLikert(
  answers: Record<string, number>,
  statementCodes: readonly string[],
): string[] {
  const errors: string[] = [];
  for (const code of statementCodes) {
    const score = answers[code];
    if (score === undefined) errors.push(`likert.${code}: missing`);
    else if (!isInt(score) || score < 1 || score > 5) {
      errors.push(`likert.${code}: out of range 1..5`);
    }
  }
  for (const code of Object.keys(answers)) {
    if (!statementCodes.includes(code)) {
      errors.push(`likert.${code}: unknown statement`);
    }
  }
  return errors;
}

export function validateChoices(
  choices: Record<number, Channel>,
  taskIds: readonly number[],
): string[] {
  const errors: string[] = [];
  for (const taskId of taskIds) {
    const choice = choices[taskId];
    if (choice === undefined) {
      errors.push(`choices.task_${taskId}: no selection`);
    } else if (!CHANNELS.includes(choice)) {
      errors.push(`choices.task_${taskId}: must be one of CS, CC, STORE`);
    }
  }
  return errors;
}

export function validateSupply(s: Partial<SupplyAnswers>): string[] {
  const errors: string[] = [];
  if (!isNum(s.remuneration_uah)) {
    errors.push('supply.remuneration_uah: missing');
  } else if (s.remuneration_uah < 50 || s.remuneration_uah > 120) {
    errors.push('supply.remuneration_uah: out of range 50..120');
  }
  if (s.remuneration_demand_uah !== undefined
      && (!isNum(s.remuneration_demand_uah)
          || s.remuneration_demand_uah < 50 || s.remuneration_demand_uah > 120)) {
    errors.push('supply.remuneration_demand_uah: out of range 50..120');
  }
  if (s.cs_mode === undefined) {
    errors.push('supply.cs_mode: missing');
  } else if (!CS_MODES.includes(s.cs_mode as never)) {
    errors.push(`supply.cs_mode: must be one of ${CS_MODES.join(', ')}`);
  }
  if (!isNum(s.detour_min)) {
    errors.push('supply.detour_min: missing');
  } else if (s.detour_min < 15 || s.detour_min > 60) {
    errors.push('supply.detour_min: out of range 15..60');
  }
  if (s.importance !== undefined) {
    for (const key of Object.keys(s.importance)) {
      if (!IMPORTANCE_KEYS.includes(key as ImportanceKey)) {
        errors.push(`supply.importance.${key}: unknown attribute`);
      }
    }
    for (const key of IMPORTANCE_KEYS) {
      const rank = s.importance[key];
      if (rank === undefined) {
        errors.push(`supply.importance.${key}: missing`);
      } else if (!isInt(rank) || rank < 1 || rank > 4) {
        errors.push(`supply.importance.${key}: out of range 1..4`);
      }
    }
  }
  return errors;
}
