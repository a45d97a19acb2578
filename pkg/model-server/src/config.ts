import { readFileSync } from 'node:fs';

export type Role = 'embed' | 'generate' | 'qa' | 'extract';

export const ROLES: Role[] = ['embed', 'generate', 'qa', 'extract'];

export interface ServerConfig {
  port: number;
  device: string; // hint only; every bundled backend is CPU
  models: Partial<Record<Role, string>>;
}

export const DEFAULT_CONFIG: ServerConfig = {
  port: 8763,
  device: 'cpu',
  models: {
    embed: 'hash-ngram-256',
    generate: 'cloze-template-1',
    qa: 'overlap-span-1',
    extract: 'unit-span-1',
  },
};

export function validateConfig(config: ServerConfig): ServerConfig {
  if (!Number.isInteger(config.port) || config.port < 1 || config.port > 65535) {
    throw new Error(`invalid port ${config.port}`);
  }
  const enabled = ROLES.filter((role) => config.models[role]);
  if (enabled.length === 0) {
    throw new Error('at least one model role must be enabled');
  }
  return config;
}

/** Merge precedence: defaults < config file < environment < CLI args. */
export function loadConfig(argv: string[] = [], env = process.env): ServerConfig {
  let config: ServerConfig = {
    ...DEFAULT_CONFIG,
    models: { ...DEFAULT_CONFIG.models },
  };

  const fileArg = argValue(argv, '--config') ?? env.MODEL_SERVER_CONFIG;
  if (fileArg) {
    const raw = JSON.parse(readFileSync(fileArg, 'utf-8'));
    if (typeof raw.port === 'number') config.port = raw.port;
    if (typeof raw.device === 'string') config.device = raw.device;
    if (raw.models && typeof raw.models === 'object') {
      config.models = { ...raw.models };
    }
  }
  if (env.PORT) config.port = Number(env.PORT);
  const portArg = argValue(argv, '--port');
  if (portArg) config.port = Number(portArg);

  return validateConfig(config);
}

function argValue(argv: string[], flag: string): string | undefined {
  const idx = argv.indexOf(flag);
  return idx >= 0 && idx + 1 < argv.length ? argv[idx + 1] : undefined;
}
