//! JSON-lines encoding of run records.
//!
//! ```text
//! {"run":0,"settings":[1,3],"colors":"RG","seed":"1234","strategy":"negotiation",
//!  "transcript":[{"sender":"L","round":1,"payload":"<base64>"}, ...]}
//! ```
//!
//! Seeds are decimal strings so 64-bit values survive JSON readers that use
//! doubles.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::domain::{Color, RunRecord, Setting, SettingPair, Wing};
use crate::error::Error;
use crate::protocol::{Message, Transcript};

#[derive(Serialize, Deserialize)]
pub(crate) struct MessageWire {
    sender: String,
    round: u32,
    payload: String,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct RecordWire {
    run: u64,
    settings: [u8; 2],
    colors: String,
    seed: String,
    strategy: String,
    transcript: Vec<MessageWire>,
}

impl From<&RunRecord> for RecordWire {
    fn from(r: &RunRecord) -> Self {
        RecordWire {
            run: r.run_index,
            settings: [r.settings.left.number(), r.settings.right.number()],
            colors: format!("{}{}", r.colors.0, r.colors.1),
            seed: r.seed.to_string(),
            strategy: r.strategy_id.clone(),
            transcript: r
                .transcript
                .messages
                .iter()
                .map(|m| MessageWire {
                    sender: m.sender.tag().to_string(),
                    round: m.round,
                    payload: STANDARD.encode(&m.payload),
                })
                .collect(),
        }
    }
}

impl TryFrom<RecordWire> for RunRecord {
    type Error = Error;

    fn try_from(w: RecordWire) -> Result<Self, Error> {
        let setting = |n: u8| Setting::from_number(n).ok_or_else(|| Error::Parse(format!("bad setting {n}")));
        let colors: Vec<Color> = w
            .colors
            .chars()
            .map(|c| Color::from_char(c).ok_or_else(|| Error::Parse(format!("bad color {c:?}"))))
            .collect::<Result<_, _>>()?;
        let [left, right] = colors[..] else {
            return Err(Error::Parse(format!("colors {:?} must be two characters", w.colors)));
        };
        let messages = w
            .transcript
            .into_iter()
            .map(|m| {
                Ok(Message {
                    sender: Wing::from_tag(&m.sender)
                        .ok_or_else(|| Error::Parse(format!("bad sender {:?}", m.sender)))?,
                    round: m.round,
                    payload: STANDARD.decode(&m.payload).map_err(|e| Error::Parse(e.to_string()))?,
                })
            })
            .collect::<Result<_, Error>>()?;
        Ok(RunRecord {
            run_index: w.run,
            settings: SettingPair::new(setting(w.settings[0])?, setting(w.settings[1])?),
            colors: (left, right),
            transcript: Transcript { messages },
            seed: w.seed.parse().map_err(|_| Error::Parse(format!("bad seed {:?}", w.seed)))?,
            strategy_id: w.strategy,
        })
    }
}
