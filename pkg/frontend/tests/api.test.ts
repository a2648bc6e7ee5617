import { describe, expect, it } from "vitest";
import { ApiError, TmmClient } from "../src/api.js";

function fakeFetch(routes: Record<string, { status?: number; body: unknown }>) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const key = `${init?.method ?? "GET"} ${url}`;
    const route = routes[key];
    if (!route) throw new Error(`no fake route for ${key}`);
    return new Response(JSON.stringify(route.body), {
      status: route.status ?? 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetchFn, calls };
}

describe("TmmClient", () => {
  it("lists snapshots", async () => {
    const { fetchFn } = fakeFetch({
      "GET /api/snapshots": {
        body: { snapshots: [{ id: "abc", timestamp: "t", loaded: false }] },
      },
    });
    const client = new TmmClient("", fetchFn);
    const snaps = await client.listSnapshots();
    expect(snaps).toHaveLength(1);
    expect(snaps[0].id).toBe("abc");
  });

  it("posts pins with a ray body and returns label verbatim", async () => {
    const { fetchFn, calls } = fakeFetch({
      "POST /api/sessions/tok/pins": {
        body: { pin: { x: 1, y: 2, z: 3, layer: "LIVE", time: "t" }, segments: [], label: "0.91 m" },
      },
    });
    const client = new TmmClient("", fetchFn);
    const resp = await client.placePin("tok", { origin: [0, 0, 5], direction: [0, 0, -1] });
    expect(resp.label).toBe("0.91 m");
    expect(JSON.parse(calls[0].init!.body as string)).toEqual({
      ray: { origin: [0, 0, 5], direction: [0, 0, -1] },
    });
  });

  it("maps service errors to ApiError with code and status", async () => {
    const { fetchFn } = fakeFetch({
      "POST /api/snapshots/nope/load": {
        status: 404,
        body: { error: "NotFound", message: "no snapshot with id nope" },
      },
    });
    const client = new TmmClient("", fetchFn);
    const err = await client.loadSnapshot("nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("NotFound");
    expect(err.status).toBe(404);
  });

  it("prefixes the base url", async () => {
    const { fetchFn, calls } = fakeFetch({
      "GET http://x:1/api/layers": { body: { live: { visible: true, mesh_count: 0 }, loaded: [] } },
    });
    const client = new TmmClient("http://x:1", fetchFn);
    const layers = await client.layers();
    expect(layers.live.visible).toBe(true);
    expect(calls[0].url).toBe("http://x:1/api/layers");
  });
});
