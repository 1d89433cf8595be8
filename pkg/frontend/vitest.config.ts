import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'jsdom',
    include: ['tests/**/*.test.ts'],
    exclude: [
      '**/node_modules/**',
      ...(process.env.EXAMGEN_E2E ? [] : ['tests/e2e_live.test.ts']),
    ],
    testTimeout: 30000,
  },
});
