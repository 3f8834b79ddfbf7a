/** Test utilities: frozen engine fixtures and a scriptable fetch stub. */

import { readFileSync } from "node:fs";

import type { FetchLike } from "../src/api.js";

export function fixture<T>(name: string): T {
  const url = new URL(`./fixtures/${name}`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

export interface StubRoute {
  status?: number;
  body: unknown | ((requestBody: unknown) => unknown);
}

export interface StubFetch extends FetchLike {
  calls: { path: string; body: unknown }[];
}

/** fetch stub keyed by "METHOD path"; records every call it serves. */
export function stubFetch(routes: Record<string, StubRoute>): StubFetch {
  const calls: { path: string; body: unknown }[] = [];
  const impl = (async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    const route = routes[key];
    if (!route) {
      return new Response(JSON.stringify({ message: `no stub for ${key}` }), {
        status: 404,
        headers: { "Content-Type": "application/json" },
      });
    }
    const requestBody = init?.body ? JSON.parse(String(init.body)) : null;
    calls.push({ path: key, body: requestBody });
    const body =
      typeof route.body === "function"
        ? (route.body as (b: unknown) => unknown)(requestBody)
        : route.body;
    return new Response(JSON.stringify(body), {
      status: route.status ?? 200,
      headers: { "Content-Type": "application/json" },
    });
  }) as StubFetch;
  impl.calls = calls;
  return impl;
}
