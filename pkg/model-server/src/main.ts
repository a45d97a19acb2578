import { loadConfig } from './config.js';
import { createApp } from './server.js';

function main(): void {
  let config;
  try {
    config = loadConfig(process.argv.slice(2));
  } catch (err) {
    console.error(`startup error: ${(err as Error).message}`);
    process.exit(2);
  }
  const app = createApp(config);
  app.listen(config.port, () => {
    console.log(
      `model server listening on :${config.port} ` +
        `(device=${config.device}, models=${JSON.stringify(config.models)})`,
    );
  });
}

main();
