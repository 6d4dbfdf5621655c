/** Four-section survey wizard state machine.
 *
 * Sections: 1 demographics, 2 attitude statements, 3 choice tasks, 4 supply
 * questions.  A section cannot be advanced while it has validation errors,
 * tasks are presented in block order and none is skippable, and each task
 * holds exactly one selection (radio semantics).  State persists to an
 * injectable storage so an interrupted respondent can resume.
 */

import type {
  Channel,
  ChoicesSection,
  Demographics,
  ImportanceKey,
  LikertSection,
  Questionnaire,
  ResponseEnvelope,
  SupplyAnswers,
  TaskPayload,
} from './types.js';
import { CHANNELS } from './types.js';
import {
  validateChoices,
  validateDemographics,
  validateLikert,
  validateSupply,
} from './validate.js';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export interface WizardOptions {
  storage?: StorageLike;
}

export type SectionNumber = 1 | 2 | 3 | 4;

export interface AdvanceResult {
  ok: boolean;
  errors: string[];
}

interface PersistedState {
  section: SectionNumber;
  demographics: Partial<Demographics>;
  likert: Record<string, number>;
  choices: Record<number, Channel>;
  supply: Partial<SupplyAnswers>;
}

export class WizardError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'WizardError';
  }
}

export class SurveyWizard {
  readonly sessionId: string;
  readonly blockId: number;

  private sectionNumber: SectionNumber = 1;
  private demographics: Partial<Demographics> = {};
  private likert: Record<string, number> = {};
  private choices: Record<number, Channel> = {};
  private supply: Partial<SupplyAnswers> = {};
  private readonly storage?: StorageLike;
  private readonly statementCodes: string[];
  private readonly tasks: TaskPayload[];

  constructor(questionnaire: Questionnaire, options: WizardOptions = {}) {
    this.sessionId = questionnaire.session_id;
    this.blockId = questionnaire.block_id;
    this.storage = options.storage;

    const likertSection = questionnaire.sections.find(
      (s): s is LikertSection => s.id === 'likert');
    const choicesSection = questionnaire.sections.find(
      (s): s is ChoicesSection => s.id === 'choices');
    if (!likertSection || !choicesSection) {
      throw new WizardError('questionnaire is missing required sections');
    }
    this.statementCodes = likertSection.statements.map((s) => s.code);
    this.tasks = choicesSection.tasks;
    if (this.tasks.length === 0) {
      throw new WizardError('questionnaire has no choice tasks');
    }
    this.restore();
  }

  get section(): SectionNumber {
    return this.sectionNumber;
  }

  /** Task ids in presentation (block) order. */
  taskIds(): number[] {
    return this.tasks.map((t) => t.task_id);
  }

  taskPayload(taskId: number): TaskPayload {
    const task = this.tasks.find((t) => t.task_id === taskId);
    if (!task) throw new WizardError(`unknown task ${taskId}`);
    return task;
  }

  // -- answer setters ---------------------------------------------------

  setDemographic<K extends keyof Demographics>(
    name: K,
    value: Demographics[K],
  ): void {
    this.demographics[name] = value;
    this.persist();
  }

  setLikert(code: string, score: number): void {
    if (!this.statementCodes.includes(code)) {
      throw new WizardError(`unknown statement ${code}`);
    }
    this.likert[code] = score;
    this.persist();
  }

  /** Radio semantics: the new selection replaces any previous one. */
  selectChoice(taskId: number, channel: Channel): void {
    if (!this.taskIds().includes(taskId)) {
      throw new WizardError(`unknown task ${taskId}`);
    }
    if (!CHANNELS.includes(channel)) {
      throw new WizardError(`unknown alternative ${String(channel)}`);
    }
    this.choices[taskId] = channel;
    this.persist();
  }

  selectedChoice(taskId: number): Channel | null {
    return this.choices[taskId] ?? null;
  }

  setSupply<K extends keyof SupplyAnswers>(
    name: K,
    value: SupplyAnswers[K],
  ): void {
    this.supply[name] = value;
    this.persist();
  }

  setImportance(key: ImportanceKey, rank: number): void {
    this.supply.importance = {
      ...(this.supply.importance ?? {}),
      [key]: rank,
    } as SupplyAnswers['importance'];
    this.persist();
  }

  // -- navigation ---------------------------------------------------------

  sectionErrors(section: SectionNumber = this.sectionNumber): string[] {
    switch (section) {
      case 1: return validateDemographics(this.demographics);
      case 2: return validateLikert(this.likert, this.statementCodes);
      case 3: return validateChoices(this.choices, this.taskIds());
      case 4: return validateSupply(this.supply);
    }
  }

  canAdvance(): boolean {
    return this.sectionErrors().length === 0;
  }

  /** Advance one section; refused (with errors) while the section is invalid. */
  next(): AdvanceResult {
    const errors = this.sectionErrors();
    if (errors.length > 0) return { ok: false, errors };
    if (this.sectionNumber < 4) {
      this.sectionNumber = (this.sectionNumber + 1) as SectionNumber;
      this.persist();
    }
    return { ok: true, errors: [] };
  }

  back(): void {
    if (this.sectionNumber > 1) {
      this.sectionNumber = (this.sectionNumber - 1) as SectionNumber;
      this.persist();
    }
  }

  isComplete(): boolean {
    return ([1, 2, 3, 4] as const).every(
      (s) => this.sectionErrors(s).length === 0);
  }

  // -- submission -----------------------------------------------------------

  buildEnvelope(client?: Record<string, unknown>): ResponseEnvelope {
    const pending = ([1, 2, 3, 4] as const)
      .flatMap((s) => this.sectionErrors(s));
    if (pending.length > 0) {
      throw new WizardError(`incomplete survey: ${pending[0]}`);
    }
    const envelope: ResponseEnvelope = {
      session_id: this.sessionId,
      sections: {
        demographics: { ...(this.demographics as Demographics) },
        likert: { ...this.likert },
        choices: this.taskIds().map((taskId) => ({
          task_id: taskId,
          choice: this.choices[taskId] as Channel,
        })),
        supply: { ...(this.supply as SupplyAnswers) },
      },
    };
    if (client) envelope.client = client;
    return envelope;
  }

  /** Field path -> message, and the first offending control to focus. */
  static mapServerErrors(errors: string[]): {
    byField: Map<string, string>;
    focus: string | null;
  } {
    const byField = new Map<string, string>();
    for (const error of errors) {
      const sep = error.indexOf(': ');
      if (sep < 0) continue;
      const field = error.slice(0, sep);
      if (!byField.has(field)) byField.set(field, error.slice(sep + 2));
    }
    const first = byField.keys().next();
    return { byField, focus: first.done ? null : first.value };
  }

  // -- persistence ----------------------------------------------------------

  private get storageKey(): string {
    return `survey-wizard:${this.sessionId}`;
  }

  private persist(): void {
    if (!this.storage) return;
    const state: PersistedState = {
      section: this.sectionNumber,
      demographics: this.demographics,
      likert: this.likert,
      choices: this.choices,
      supply: this.supply,
    };
    this.storage.setItem(this.storageKey, JSON.stringify(state));
  }

  private restore(): void {
    if (!this.storage) return;
    const raw = this.storage.getItem(this.storageKey);
    if (!raw) return;
    try {
      const state = JSON.parse(raw) as PersistedState;
      this.sectionNumber = state.section ?? 1;
      this.demographics = state.demographics ?? {};
      this.likert = state.likert ?? {};
      this.choices = state.choices ?? {};
      this.supply = state.supply ?? {};
    } catch {
      this.storage.removeItem(this.storageKey);
    }
  }

  /** Drop persisted state (after a stored receipt). */
  clearSaved(): void {
    this.storage?.removeItem(this.storageKey);
  }
}
