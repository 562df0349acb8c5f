//! 64-bit command words: a 60-bit payload above a 4-bit opcode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PAYLOAD_BITS: u32 = 60;
pub const PAYLOAD_MAX: u64 = (1 << PAYLOAD_BITS) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum CommandType {
    SendNetBuf = 1,
    SendNetLen = 2,
    AppReadyFlag = 3,
    SendAppResp = 4,
    SendAppBuf = 5,
    DpdkNetFlag = 6,
}

impl CommandType {
    pub const ALL: [CommandType; 6] = [
        CommandType::SendNetBuf,
        CommandType::SendNetLen,
        CommandType::AppReadyFlag,
        CommandType::SendAppResp,
        CommandType::SendAppBuf,
        CommandType::DpdkNetFlag,
    ];

    pub fn from_opcode(op: u8) -> Option<CommandType> {
        CommandType::ALL.into_iter().find(|c| *c as u8 == op)
    }

    pub fn name(self) -> &'static str {
        match self {
            CommandType::SendNetBuf => "SEND_NET_BUF",
            CommandType::SendNetLen => "SEND_NET_LEN",
            CommandType::AppReadyFlag => "APP_READY_FLAG",
            CommandType::SendAppResp => "SEND_APP_RESP",
            CommandType::SendAppBuf => "SEND_APP_BUF",
            CommandType::DpdkNetFlag => "DPDK_NET_FLAG",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Command {
    pub raw: u64,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum CommandError {
    #[error("payload {0:#x} does not fit in 60 bits")]
    PayloadOverflow(u64),
    #[error("unknown opcode {0}")]
    UnknownOpcode(u8),
}

pub fn encode_command(payload: u64, op: CommandType) -> Result<Command, CommandError> {
    if payload > PAYLOAD_MAX {
        return Err(CommandError::PayloadOverflow(payload));
    }
    Ok(Command { raw: (payload << 4) | op as u64 })
}

impl Command {
    pub fn payload(self) -> u64 {
        self.raw >> 4
    }

    pub fn opcode(self) -> u8 {
        (self.raw & 0xF) as u8
    }

    pub fn decode(self) -> Result<(u64, CommandType), CommandError> {
        let op = CommandType::from_opcode(self.opcode()).ok_or(CommandError::UnknownOpcode(self.opcode()))?;
        Ok((self.payload(), op))
    }
}

/// Status words answer parked UC loads. Opcode 0 marks an error; otherwise
/// the word carries the ready count with the flag's own opcode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatusWord {
    Ready { flag: CommandType, count: u32 },
    Error { code: StatusCode, slot: u32, vpn: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum StatusCode {
    PageFault = 1,
    QueueFull = 2,
}

impl StatusWord {
    // Error payload: [vpn: 36 bits][slot: 16 bits][code: 8 bits].
    pub fn encode(self) -> u64 {
        match self {
            StatusWord::Ready { flag, count } => ((count as u64) << 4) | flag as u64,
            StatusWord::Error { code, slot, vpn } => {
                let payload = ((vpn & 0xF_FFFF_FFFF) << 24) | ((slot as u64 & 0xFFFF) << 8) | code as u64;
                payload << 4
            }
        }
    }

    pub fn decode(raw: u64) -> Result<StatusWord, CommandError> {
        let op = (raw & 0xF) as u8;
        let payload = raw >> 4;
        if op == 0 {
            let code = match (payload & 0xFF) as u8 {
                1 => StatusCode::PageFault,
                2 => StatusCode::QueueFull,
                c => return Err(CommandError::UnknownOpcode(c)),
            };
            return Ok(StatusWord::Error { code, slot: ((payload >> 8) & 0xFFFF) as u32, vpn: payload >> 24 });
        }
        let flag = CommandType::from_opcode(op).ok_or(CommandError::UnknownOpcode(op))?;
        Ok(StatusWord::Ready { flag, count: payload as u32 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_payload_net_buf() {
        assert_eq!(encode_command(0, CommandType::SendNetBuf).unwrap().raw, 0x1);
    }

    #[test]
    fn net_len_of_full_frame() {
        // 1518 = 0x5EE; shifted by one nibble with opcode 2.
        assert_eq!(encode_command(1518, CommandType::SendNetLen).unwrap().raw, 0x5EE2);
    }

    #[test]
    fn overflow_and_unknown() {
        assert_eq!(encode_command(1 << 60, CommandType::SendNetBuf), Err(CommandError::PayloadOverflow(1 << 60)));
        assert_eq!(Command { raw: 0x10 }.decode(), Err(CommandError::UnknownOpcode(0)));
        assert_eq!(Command { raw: 0x17 }.decode(), Err(CommandError::UnknownOpcode(7)));
    }

    #[test]
    fn status_words_round_trip() {
        for w in [
            StatusWord::Ready { flag: CommandType::AppReadyFlag, count: 5 },
            StatusWord::Error { code: StatusCode::PageFault, slot: 3, vpn: 0x40_000 },
            StatusWord::Error { code: StatusCode::QueueFull, slot: 0, vpn: 0 },
        ] {
            assert_eq!(StatusWord::decode(w.encode()).unwrap(), w);
        }
        assert_eq!(StatusWord::Error { code: StatusCode::PageFault, slot: 0, vpn: 1 }.encode() & 0xF, 0);
    }
}
