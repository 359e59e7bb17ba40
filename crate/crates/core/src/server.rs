//! Newline-delimited JSON protocol exposing [`Env`] over TCP. Each
//! connection owns one environment; connections share nothing.
//!
//! Requests: `{"cmd":"spec"}`, `{"cmd":"reset","config":{...}}`,
//! `{"cmd":"step","action":[dx,dy,dth]}`, `{"cmd":"close"}`.
//! Errors come back as `{"error":"<code>","message":"..."}`. Unparseable
//! requests also close the connection; `episode_finished` and `no_episode`
//! leave it open.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::env::{self, Env, EpisodeConfig, Observation, RewardBreakdown, StepInfo};
use crate::error::{Error, Result};
use crate::perception::EncoderSpec;
use crate::sim::{ActionDelta, LimitSurfaceParams};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Request {
    Spec,
    Reset {
        #[serde(default)]
        config: Option<Value>,
    },
    Step {
        action: [f64; 3],
    },
    Close,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub obs: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetResponse {
    pub obs: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
    pub message: String,
}

/// Settings shared by every connection of a server.
#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    pub episode: EpisodeConfig,
    pub encoder: EncoderSpec,
    pub sim: LimitSurfaceParams,
}

/// Applies a JSON object of overrides on top of `base`, field by field.
pub fn merge_config(base: &EpisodeConfig, overrides: Option<&Value>) -> Result<EpisodeConfig> {
    let Some(ov) = overrides else { return Ok(base.clone()) };
    let Value::Object(ov) = ov else {
        return Err(Error::Protocol("config must be an object".into()));
    };
    let mut merged = serde_json::to_value(base)?;
    let obj = merged.as_object_mut().expect("config serializes to an object");
    for (k, v) in ov {
        if !obj.contains_key(k) {
            return Err(Error::InvalidConfig(format!("unknown config field `{k}`")));
        }
        obj.insert(k.clone(), v.clone());
    }
    let cfg: EpisodeConfig = serde_json::from_value(merged).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn spec_response(cfg: &ServerConfig) -> Value {
    json!({
        "protocol_version": PROTOCOL_VERSION,
        "layout_version": env::LAYOUT_VERSION,
        "obs_dim": env::OBS_DIM,
        "action_dim": env::ACTION_DIM,
        "layout": {
            "latent": [env::layout::LATENT.start, env::layout::LATENT.end],
            "ee_pose": [env::layout::EE_POSE.start, env::layout::EE_POSE.end],
            "joints": [env::layout::JOINTS.start, env::layout::JOINTS.end],
            "sg_now": [env::layout::SG_NOW.start, env::layout::SG_NOW.end],
            "sg_lagged": [env::layout::SG_LAGGED.start, env::layout::SG_LAGGED.end],
            "contact": env::layout::CONTACT,
            "goal_distance": env::layout::GOAL_DISTANCE,
        },
        "action_caps": [cfg.sim.caps.dxy_max, cfg.sim.caps.dxy_max, cfg.sim.caps.dtheta_max],
        "defaults": cfg.episode,
    })
}

fn error_code(e: &Error) -> &'static str {
    match e {
        Error::EpisodeFinished => "episode_finished",
        Error::NoEpisode => "no_episode",
        Error::ResetFailed(_) => "reset_failed",
        Error::InvalidConfig(_) | Error::InvalidScenario(_) | Error::UnknownSuite(_) => "invalid_config",
        Error::Protocol(_) | Error::Json(_) => "protocol",
        _ => "internal",
    }
}

fn error_value(e: &Error) -> Value {
    serde_json::to_value(ErrorResponse { error: error_code(e).into(), message: e.to_string() }).expect("plain struct")
}

/// What to do with the connection after answering.
enum Next {
    Continue,
    Close,
}

/// Handles one request line against `env`.
fn handle_line(line: &str, env: &mut Env, cfg: &ServerConfig) -> (Value, Next) {
    let req: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => return (error_value(&Error::Protocol(e.to_string())), Next::Close),
    };
    let result = match req {
        Request::Spec => Ok(spec_response(cfg)),
        Request::Reset { config } => merge_config(&cfg.episode, config.as_ref())
            .and_then(|c| env.reset(&c))
            .map(|obs| serde_json::to_value(ResetResponse { obs }).expect("plain struct")),
        Request::Step { action } => {
            if !action.iter().all(|v| v.is_finite()) {
                return (error_value(&Error::Protocol("non-finite action".into())), Next::Close);
            }
            env.step(&ActionDelta::from_array(action)).map(|r| {
                serde_json::to_value(StepResponse { obs: r.observation, reward: r.reward, done: r.done, info: r.info })
                    .expect("plain struct")
            })
        }
        Request::Close => {
            env.close();
            return (json!({"ok": true}), Next::Close);
        }
    };
    match result {
        Ok(v) => (v, Next::Continue),
        Err(e) => (error_value(&e), Next::Continue),
    }
}

/// Serves a single connection until the client closes it or breaks the
/// protocol.
pub fn handle_connection(stream: TcpStream, cfg: &ServerConfig) -> Result<()> {
    stream.set_nodelay(true)?;
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    let mut env = Env::new(cfg.encoder.clone(), cfg.sim.clone())?;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (resp, next) = handle_line(&line, &mut env, cfg);
        serde_json::to_writer(&mut writer, &resp)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if let Next::Close = next {
            break;
        }
    }
    Ok(())
}

pub struct Server {
    listener: TcpListener,
    config: ServerConfig,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: ServerConfig) -> Result<Self> {
        config.encoder.validate()?;
        config.sim.validate()?;
        config.episode.validate()?;
        Ok(Server { listener: TcpListener::bind(addr)?, config })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts connections forever, one thread each.
    pub fn run(self) -> Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let cfg = self.config.clone();
            thread::spawn(move || {
                let _ = handle_connection(stream, &cfg);
            });
        }
        Ok(())
    }
}

/// Minimal blocking client, used by tests and tools.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(Client { reader: BufReader::new(stream.try_clone()?), writer: stream })
    }

    /// Sends a raw line and returns the parsed reply.
    pub fn request_raw(&mut self, line: &str) -> Result<Value> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut buf = String::new();
        if self.reader.read_line(&mut buf)? == 0 {
            return Err(Error::Protocol("connection closed".into()));
        }
        Ok(serde_json::from_str(&buf)?)
    }

    pub fn request(&mut self, req: &Request) -> Result<Value> {
        self.request_raw(&serde_json::to_string(req)?)
    }
}
