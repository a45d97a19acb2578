import express, { type Express, type Request, type Response, type NextFunction } from 'express';

import { type ServerConfig, validateConfig } from './config.js';
import {
  makeEmbedModel,
  makeExtractModel,
  makeGenerateModel,
  makeQaModel,
  type EmbedModel,
  type ExtractModel,
  type GenerateModel,
  type QaModel,
} from './models.js';

interface LoadedModels {
  embed?: EmbedModel;
  generate?: GenerateModel;
  qa?: QaModel;
  extract?: ExtractModel;
}

function loadModels(config: ServerConfig): LoadedModels {
  const loaded: LoadedModels = {};
  if (config.models.embed) loaded.embed = makeEmbedModel(config.models.embed);
  if (config.models.generate) loaded.generate = makeGenerateModel(config.models.generate);
  if (config.models.qa) loaded.qa = makeQaModel(config.models.qa);
  if (config.models.extract) loaded.extract = makeExtractModel(config.models.extract);
  return loaded;
}

export function createApp(config: ServerConfig): Express {
  validateConfig(config);
  const models = loadModels(config);
  const app = express();
  app.use(express.json({ limit: '4mb' }));

  if (models.embed) {
    const embedder = models.embed;
    app.post('/embed', (req: Request, res: Response) => {
      const texts = req.body?.texts;
      if (!Array.isArray(texts) || texts.length === 0 || !texts.every((t) => typeof t === 'string')) {
        res.status(400).json({ error: 'texts must be a non-empty array of strings' });
        return;
      }
      res.json({ embeddings: embedder.embed(texts) });
    });
  }

  if (models.generate) {
    const generator = models.generate;
    app.post('/generate', (req: Request, res: Response) => {
      const prompt = req.body?.prompt;
      if (typeof prompt !== 'string' || prompt.length === 0) {
        res.status(400).json({ error: 'prompt must be a non-empty string' });
        return;
      }
      res.json({ text: generator.generate(prompt) });
    });
  }

  if (models.qa) {
    const qa = models.qa;
    app.post('/qa', (req: Request, res: Response) => {
      const { question, context } = req.body ?? {};
      if (typeof question !== 'string' || typeof context !== 'string' || !question || !context) {
        res.status(400).json({ error: 'question and context must be non-empty strings' });
        return;
      }
      res.json({ answer: qa.answer(question, context) });
    });
  }

  if (models.extract) {
    const extractor = models.extract;
    app.post('/extract', (req: Request, res: Response) => {
      const sentence = req.body?.sentence;
      if (typeof sentence !== 'string' || sentence.length === 0) {
        res.status(400).json({ error: 'sentence must be a non-empty string' });
        return;
      }
      res.json({ spans: extractor.extract(sentence) });
    });
  }

  app.get('/healthz', (_req: Request, res: Response) => {
    res.json({
      status: 'ok',
      device: config.device,
      models: config.models,
    });
  });

  // malformed JSON bodies and handler crashes
  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: 'request body is not valid JSON' });
      return;
    }
    res.status(500).json({ error: err.message });
  });

  return app;
}
