export * from './types.js';
export * from './api.js';
export * from './choiceTask.js';
export * from './validate.js';
export * from './wizard.js';
