// Entry point: one console instance per agent, selected by ?agent=<baseURL>
// (defaults to the origin that served the bundle, i.e. the agent itself
// when mounted at /console/).

import { AgentApi } from './api.js';
import { ConsoleSession } from './session.js';
import { ConsoleView } from './view.js';

function agentBaseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get('agent');
  return (fromQuery ?? window.location.origin).replace(/\/+$/, '');
}

const base = agentBaseUrl();
const session = new ConsoleSession(new AgentApi(base));
new ConsoleView(document.getElementById('app') as HTMLElement, session, base);
session.start();
