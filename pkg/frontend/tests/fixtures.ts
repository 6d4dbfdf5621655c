/** Hand-built questionnaire payloads shaped exactly like the service's. */

import type {
  AttributeRow,
  Channel,
  Questionnaire,
  TaskPayload,
} from '../src/types.js';

export function makeTask(
  taskId: number,
  values: {
    cs_cost: number; cs_time: number; cs_co2: number; cs_flex: number;
    cc_cost: number; cc_time: number;
  },
): TaskPayload {
  const row = (
    key: AttributeRow['key'],
    kind: AttributeRow['kind'],
    unit: string,
    label: string,
    cs: number | null,
    cc: number | null,
  ): AttributeRow => ({
    key, kind, unit, label_en: label, label_uk: `${label} (uk)`,
    values: { CS: cs, CC: cc, STORE: null },
  });
  return {
    task_id: taskId,
    alternatives: [
      { id: 'CS', label_en: 'Crowd-shipping delivery', label_uk: 'Доставка приватною особою' },
      { id: 'CC', label_en: 'Commercial carrier delivery', label_uk: 'Доставка курʼєрською службою' },
      { id: 'STORE', label_en: 'Buy in the store myself', label_uk: 'Куплю в магазині самостійно' },
    ],
    attribute_rows: [
      row('cost', 'number', 'UAH', 'Delivery cost', values.cs_cost, values.cc_cost),
      row('time', 'number', 'h', 'Delivery time', values.cs_time, values.cc_time),
      row('eco', 'boolean', '', 'Reduces delivery traffic and emissions', values.cs_co2, 0),
      row('flex', 'boolean', '', 'Flexible delivery conditions', values.cs_flex, 0),
    ],
  };
}

/** The published example screen: carrier 70 UAH / 6 h, crowd-shipping
 * 90 UAH / 3 h with emission reduction and flexible conditions. */
export const EXAMPLE_TASK = makeTask(1, {
  cs_cost: 90, cs_time: 3, cs_co2: 1, cs_flex: 1, cc_cost: 70, cc_time: 6,
});

export function makeQuestionnaire(sessionId = 'session-test'): Questionnaire {
  const grid = [
    { cs_cost: 60, cs_time: 1.5, cs_co2: 1, cs_flex: 0, cc_cost: 50, cc_time: 3 },
    { cs_cost: 90, cs_time: 4.5, cs_co2: 0, cs_flex: 1, cc_cost: 75, cc_time: 9 },
    { cs_cost: 120, cs_time: 7.5, cs_co2: 1, cs_flex: 1, cc_cost: 100, cc_time: 18 },
    { cs_cost: 60, cs_time: 10.5, cs_co2: 0, cs_flex: 0, cc_cost: 50, cc_time: 30 },
    { cs_cost: 90, cs_time: 1.5, cs_co2: 1, cs_flex: 0, cc_cost: 75, cc_time: 3 },
    { cs_cost: 120, cs_time: 4.5, cs_co2: 0, cs_flex: 1, cc_cost: 100, cc_time: 9 },
    { cs_cost: 60, cs_time: 7.5, cs_co2: 1, cs_flex: 1, cc_cost: 50, cc_time: 18 },
    { cs_cost: 90, cs_time: 10.5, cs_co2: 0, cs_flex: 0, cc_cost: 75, cc_time: 30 },
    { cs_cost: 120, cs_time: 1.5, cs_co2: 1, cs_flex: 0, cc_cost: 100, cc_time: 3 },
  ];
  return {
    session_id: sessionId,
    block_id: 1,
    sections: [
      {
        id: 'demographics',
        title_en: 'About you',
        title_uk: 'Про вас',
        fields: [],
      },
      {
        id: 'likert',
        title_en: 'Your views on grocery delivery',
        title_uk: 'Ваше ставлення до доставки продуктів',
        scale: {
          min: 1, max: 5,
          labels_en: ['Strongly disagree', 'Disagree', 'Neutral', 'Agree', 'Strongly agree'],
          labels_uk: ['Зовсім не згоден', 'Не згоден', 'Нейтрально', 'Згоден', 'Повністю згоден'],
        },
        statements: Array.from({ length: 15 }, (_, i) => ({
          code: `F${i + 1}`,
          text_en: `Statement ${i + 1}`,
          text_uk: `Твердження ${i + 1}`,
        })),
      },
      {
        id: 'choices',
        title_en: 'Nine delivery situations',
        title_uk: 'Девʼять ситуацій доставки',
        instruction_en: 'In each situation, pick the option you would actually choose.',
        instruction_uk: 'У кожній ситуації оберіть варіант, який ви справді обрали б.',
        tasks: grid.map((v, i) => makeTask(i + 1, v)),
      },
      {
        id: 'supply',
        title_en: 'Delivering for others',
        title_uk: 'Доставка для інших',
        items: [],
      },
    ],
  };
}

export function fillAllSections(
  wizard: import('../src/wizard.js').SurveyWizard,
  choice: Channel = 'CS',
): void {
  wizard.setDemographic('age_years', 29);
  wizard.setDemographic('gender', 'female');
  wizard.setDemographic('household_size', 3);
  wizard.setDemographic('n_children', 1);
  wizard.setDemographic('car_in_household', 1);
  wizard.setDemographic('income_uah_month', 16000);
  wizard.setDemographic('employment', 'full');
  wizard.setDemographic('education_high', 1);
  for (let i = 1; i <= 15; i++) wizard.setLikert(`F${i}`, ((i - 1) % 5) + 1);
  for (const taskId of wizard.taskIds()) wizard.selectChoice(taskId, choice);
  wizard.setSupply('remuneration_uah', 85);
  wizard.setSupply('cs_mode', 'subway');
  wizard.setSupply('detour_min', 30);
  wizard.setSupply('remuneration_demand_uah', 80);
  wizard.setImportance('cost', 4);
  wizard.setImportance('time', 3);
  wizard.setImportance('eco', 1);
  wizard.setImportance('flex', 2);
}
