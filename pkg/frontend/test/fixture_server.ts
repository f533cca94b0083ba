/** In-process HTTP fixture mimicking the motion-agent service for UI tests. */

import { createServer, type IncomingMessage, type Server, type ServerResponse } from "node:http";
import type { AddressInfo } from "node:net";
import type { JointsDoc, PlanDoc, SessionTurn } from "../src/types.js";

interface ScriptedTurn {
  plan: PlanDoc;
  response_text: string | null;
  motion_ids: string[];
  captions: string[];
}

function walkFrames(t: number, joints = 8): number[][][] {
  const frames: number[][][] = [];
  for (let f = 0; f < t; f++) {
    const frame: number[][] = [];
    for (let j = 0; j < joints; j++) {
      frame.push([0.1 * j, 0.9 + 0.05 * Math.sin(f / 3 + j), 0.05 * f]);
    }
    frames.push(frame);
  }
  return frames;
}

const PARENT = [0, 0, 1, 2, 1, 1, 0, 0];
const NAMES = ["root", "spine", "neck", "head", "l_hand", "r_hand", "l_foot", "r_foot"];

export function makeFixture(): {
  turns: ScriptedTurn[];
  joints: Record<string, JointsDoc>;
} {
  const turns: ScriptedTurn[] = [
    {
      plan: {
        response: null,
        calls: [
          { task: "generate", argument: "a person walks forward", motion_ref: null, placement: null },
          { task: "generate", argument: "a person waves", motion_ref: null, placement: null },
        ],
      },
      response_text: null,
      motion_ids: ["fix-m0000"],
      captions: [],
    },
    {
      plan: {
        response: null,
        calls: [{ task: "caption", argument: "", motion_ref: "fix-m0000", placement: null }],
      },
      response_text: null,
      motion_ids: [],
      captions: ["a person walks forward and then waves"],
    },
    {
      plan: {
        response: null,
        calls: [
          { task: "generate", argument: "a person crouches", motion_ref: null, placement: null },
          { task: "generate", argument: "a person turns left", motion_ref: null, placement: null },
          { task: "generate", argument: "a person waves", motion_ref: null, placement: null },
        ],
      },
      response_text: null,
      motion_ids: ["fix-m0001"],
      captions: [],
    },
  ];
  const joints: Record<string, JointsDoc> = {
    "fix-m0000": {
      motion_id: "fix-m0000",
      fps: 20,
      joints: walkFrames(48),
      parent: PARENT,
      joint_names: NAMES,
      placement_applied: false,
      boundary_frames: [24],
      sources: ["a person walks forward", "a person waves"],
      truncated: false,
    },
    "fix-m0001": {
      motion_id: "fix-m0001",
      fps: 20,
      joints: walkFrames(60),
      parent: PARENT,
      joint_names: NAMES,
      placement_applied: false,
      boundary_frames: [20, 40],
      sources: ["a person crouches", "a person turns left", "a person waves"],
      truncated: false,
    },
  };
  return { turns, joints };
}

export class FixtureServer {
  private server: Server;
  private played: SessionTurn[] = [];
  private fixture = makeFixture();
  baseUrl = "";

  async start(): Promise<void> {
    this.server = createServer((req, res) => this.route(req, res));
    await new Promise<void>((resolve) => this.server.listen(0, "127.0.0.1", resolve));
    const addr = this.server.address() as AddressInfo;
    this.baseUrl = `http://127.0.0.1:${addr.port}`;
  }

  async stop(): Promise<void> {
    await new Promise<void>((resolve, reject) =>
      this.server.close((err) => (err ? reject(err) : resolve())),
    );
  }

  private json(res: ServerResponse, status: number, body: unknown): void {
    res.writeHead(status, { "Content-Type": "application/json" });
    res.end(JSON.stringify(body));
  }

  private route(req: IncomingMessage, res: ServerResponse): void {
    const url = req.url ?? "";
    if (req.method === "POST" && url === "/sessions") {
      this.json(res, 200, { session_id: "fixture-session" });
      return;
    }
    if (req.method === "POST" && url === "/sessions/fixture-session/turns") {
      let body = "";
      req.on("data", (chunk) => (body += chunk));
      req.on("end", () => {
        const { text } = JSON.parse(body) as { text: string };
        if (text === "FAIL") {
          this.json(res, 502, { detail: "planner endpoint unreachable" });
          return;
        }
        const idx = this.played.length;
        if (idx >= this.fixture.turns.length) {
          this.json(res, 422, { detail: "fixture script exhausted" });
          return;
        }
        const turn = this.fixture.turns[idx];
        this.played.push({
          index: idx,
          user_text: text,
          plan: turn.plan,
          response_text: turn.response_text,
          motion_ids: turn.motion_ids,
          captions: turn.captions,
        });
        this.json(res, 200, turn);
      });
      return;
    }
    if (req.method === "GET" && url === "/sessions/fixture-session") {
      this.json(res, 200, {
        session_id: "fixture-session",
        motion_ids: this.played.flatMap((t) => t.motion_ids),
        turns: this.played,
      });
      return;
    }
    const jointsMatch = url.match(/^\/motions\/([^/]+)\/joints$/);
    if (req.method === "GET" && jointsMatch) {
      const doc = this.fixture.joints[jointsMatch[1]];
      if (!doc) {
        this.json(res, 404, { detail: `unknown motion ${jointsMatch[1]}` });
        return;
      }
      this.json(res, 200, doc);
      return;
    }
    this.json(res, 404, { detail: `no route for ${req.method} ${url}` });
  }
}
