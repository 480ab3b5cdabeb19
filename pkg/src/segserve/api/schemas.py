"""Request/response models for the HTTP API."""

from __future__ import annotations

from datetime import datetime

from pydantic import BaseModel, Field


class RegisterRequest(BaseModel):
    username: str
    password: str


class RegisterResponse(BaseModel):
    user_id: int


class LoginRequest(BaseModel):
    username: str
    password: str


class LoginResponse(BaseModel):
    token: str
    expires_at: datetime


class TaskSubmitResponse(BaseModel):
    task_id: str


class TaskSummary(BaseModel):
    task_id: str
    category: str
    submitted_at: datetime
    state: str


class TaskDetail(BaseModel):
    task_id: str
    category: str
    submitted_at: datetime
    state: str
    safety: str
    result_ready: bool
    error: str | None = None


class LabelOut(BaseModel):
    index: int
    name: str


class DiagnoseResponse(BaseModel):
    label: LabelOut
    scores: list[float] = Field(min_length=1)


class ResetRequest(BaseModel):
    username: str


class ResetResponse(BaseModel):
    reset_token: str
    expires_at: datetime


class ResetConfirmRequest(BaseModel):
    token: str
    new_password: str


class ErrorBody(BaseModel):
    error: str
    message: str
