/** Wire types for the survey service HTTP API. */

export type Channel = 'CS' | 'CC' | 'STORE';

export const CHANNELS: readonly Channel[] = ['CS', 'CC', 'STORE'];

export interface SessionInfo {
  session_id: string;
  block_id: number;
}

export interface Labeled {
  label_en: string;
  label_uk: string;
}

export interface AttributeRow extends Labeled {
  key: 'cost' | 'time' | 'eco' | 'flex';
  kind: 'number' | 'boolean';
  unit: string;
  values: Record<Channel, number | null>;
}

export interface TaskPayload {
  task_id: number;
  alternatives: Array<{ id: Channel } & Labeled>;
  attribute_rows: AttributeRow[];
}

export interface DemographicsSection {
  id: 'demographics';
  title_en: string;
  title_uk: string;
  fields: Array<{
    name: string;
    type: string;
    required: boolean;
    options?: Array<string | number>;
    min?: number;
    min_exclusive?: number;
  }>;
}

export interface LikertSection {
  id: 'likert';
  title_en: string;
  title_uk: string;
  scale: { min: number; max: number; labels_en: string[]; labels_uk: string[] };
  statements: Array<{ code: string; text_en: string; text_uk: string }>;
}

export interface ChoicesSection {
  id: 'choices';
  title_en: string;
  title_uk: string;
  instruction_en: string;
  instruction_uk: string;
  tasks: TaskPayload[];
}

export interface SupplySection {
  id: 'supply';
  title_en: string;
  title_uk: string;
  items: Array<{
    name: string;
    type: string;
    required: boolean;
    min?: number;
    max?: number;
    options?: Array<{ id: string } & Labeled>;
    items?: Array<{ id: string } & Labeled>;
  } & Labeled>;
}

export type Section =
  | DemographicsSection
  | LikertSection
  | ChoicesSection
  | SupplySection;

export interface Questionnaire {
  session_id: string;
  block_id: number;
  sections: Section[];
}

export interface Demographics {
  age_years: number;
  gender: 'female' | 'male';
  household_size: number;
  n_children: number;
  car_in_household: 0 | 1;
  income_uah_month: number;
  employment: 'full' | 'part' | 'unemployed' | 'housekeeper' | 'student';
  education_high: 0 | 1;
}

export type ImportanceKey = 'cost' | 'time' | 'eco' | 'flex';

export interface SupplyAnswers {
  remuneration_uah: number;
  cs_mode: 'car' | 'subway' | 'bus' | 'tram_trolley' | 'bicycle' | 'walk';
  detour_min: number;
  remuneration_demand_uah?: number;
  importance?: Record<ImportanceKey, number>;
}

export interface ResponseEnvelope {
  session_id: string;
  sections: {
    demographics: Demographics;
    likert: Record<string, number>;
    choices: Array<{ task_id: number; choice: Channel }>;
    supply: SupplyAnswers;
  };
  client?: Record<string, unknown>;
}

export interface Receipt {
  session_id: string;
  respondent_id: string;
  status: string;
}

export const GENDERS = ['female', 'male'] as const;
export const EMPLOYMENT_STATUSES = [
  'full', 'part', 'unemployed', 'housekeeper', 'student',
] as const;
export const CS_MODES = [
  'car', 'subway', 'bus', 'tram_trolley', 'bicycle', 'walk',
] as const;
export const IMPORTANCE_KEYS: readonly ImportanceKey[] = [
  'cost', 'time', 'eco', 'flex',
];
